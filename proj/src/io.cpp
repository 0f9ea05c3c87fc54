#include "fno/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>

namespace fno::io {

namespace {

void pack_u32(std::uint32_t v, unsigned char* out) {
    out[0] = static_cast<unsigned char>(v);
    out[1] = static_cast<unsigned char>(v >> 8);
    out[2] = static_cast<unsigned char>(v >> 16);
    out[3] = static_cast<unsigned char>(v >> 24);
}

void pack_u64(std::uint64_t v, unsigned char* out) {
    for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint32_t unpack_u32(const unsigned char* in) {
    return static_cast<std::uint32_t>(in[0]) | static_cast<std::uint32_t>(in[1]) << 8 |
           static_cast<std::uint32_t>(in[2]) << 16 | static_cast<std::uint32_t>(in[3]) << 24;
}

std::uint64_t unpack_u64(const unsigned char* in) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | in[i];
    return v;
}

}  // namespace

BinaryWriter::BinaryWriter(const std::string& path)
    : path_(path), tmp_path_(path + ".tmp"), out_(tmp_path_, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot open '" + tmp_path_ + "' for writing");
}

BinaryWriter::~BinaryWriter() {
    if (!committed_) {
        out_.close();
        std::remove(tmp_path_.c_str());
    }
}

void BinaryWriter::u8(std::uint8_t v) { bytes(&v, 1); }

void BinaryWriter::u32(std::uint32_t v) {
    unsigned char buf[4];
    pack_u32(v, buf);
    bytes(buf, 4);
}

void BinaryWriter::u64(std::uint64_t v) {
    unsigned char buf[8];
    pack_u64(v, buf);
    bytes(buf, 8);
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::f64_array(const double* data, std::size_t count) {
    if constexpr (std::endian::native == std::endian::little) {
        bytes(data, count * sizeof(double));
    } else {
        for (std::size_t i = 0; i < count; ++i) f64(data[i]);
    }
}

void BinaryWriter::bytes(const void* data, std::size_t count) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(count));
    if (!out_) throw Error("write failed on '" + tmp_path_ + "'");
    offset_ += count;
}

void BinaryWriter::commit() {
    out_.flush();
    out_.close();
    if (!out_) throw Error("flush failed on '" + tmp_path_ + "'");
    if (std::rename(tmp_path_.c_str(), path_.c_str()) != 0)
        throw Error("cannot rename '" + tmp_path_ + "' to '" + path_ + "'");
    committed_ = true;
}

BinaryReader::BinaryReader(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw Error("cannot open '" + path + "' for reading");
    const std::streamsize size = in.tellg();
    in.seekg(0);
    data_.resize(static_cast<std::size_t>(size));
    if (size > 0) {
        in.read(reinterpret_cast<char*>(data_.data()), size);
        if (!in) throw Error("read failed on '" + path + "'");
    }
}

void BinaryReader::need(std::size_t count, const char* what) const {
    // Written overflow-safe: count may come from untrusted header fields.
    if (count > data_.size() - offset_)
        throw FormatError(std::string("truncated file while reading ") + what, offset_);
}

std::uint8_t BinaryReader::u8() {
    need(1, "u8");
    return data_[offset_++];
}

std::uint32_t BinaryReader::u32() {
    need(4, "u32");
    const std::uint32_t v = unpack_u32(data_.data() + offset_);
    offset_ += 4;
    return v;
}

std::uint64_t BinaryReader::u64() {
    need(8, "u64");
    const std::uint64_t v = unpack_u64(data_.data() + offset_);
    offset_ += 8;
    return v;
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

void BinaryReader::f64_array(double* data, std::size_t count) {
    need(count * sizeof(double), "f64 array");
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(data, data_.data() + offset_, count * sizeof(double));
        offset_ += count * sizeof(double);
    } else {
        for (std::size_t i = 0; i < count; ++i) data[i] = f64();
    }
}

std::string BinaryReader::fixed_bytes(std::size_t count) {
    need(count, "bytes");
    std::string s(reinterpret_cast<const char*>(data_.data() + offset_), count);
    offset_ += count;
    return s;
}

void BinaryReader::expect_exhausted(const std::string& what) const {
    if (offset_ != data_.size())
        throw FormatError(what + ": " + std::to_string(data_.size() - offset_) +
                              " unexpected trailing bytes",
                          offset_);
}

}  // namespace fno::io
