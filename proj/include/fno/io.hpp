#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "fno/errors.hpp"

namespace fno::io {

/// Little-endian buffered writer. Offsets are tracked for error messages.
class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path);
    ~BinaryWriter();

    void u8(std::uint8_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void f64_array(const double* data, std::size_t count);
    void bytes(const void* data, std::size_t count);

    std::uint64_t offset() const { return offset_; }

    /// Flushes and atomically renames the temporary file onto the target.
    void commit();

private:
    std::string path_;
    std::string tmp_path_;
    std::ofstream out_;
    std::uint64_t offset_ = 0;
    bool committed_ = false;
};

/// Whole-file little-endian reader with bounds checking; every failure
/// throws FormatError carrying the byte offset.
class BinaryReader {
public:
    explicit BinaryReader(const std::string& path);

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    void f64_array(double* data, std::size_t count);
    std::string fixed_bytes(std::size_t count);

    std::uint64_t offset() const { return offset_; }
    std::uint64_t size() const { return data_.size(); }
    std::uint64_t remaining() const { return data_.size() - offset_; }
    void expect_exhausted(const std::string& what) const;

private:
    void need(std::size_t count, const char* what) const;

    std::vector<unsigned char> data_;
    std::uint64_t offset_ = 0;
};

}  // namespace fno::io
