#pragma once

#include <stdexcept>
#include <string>

namespace fno {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Array or grid dimensions do not match what an operation requires.
struct ShapeError : Error {
    using Error::Error;
};

/// Input values violate a precondition (non-finite field, volume
/// fraction outside [0,1], degenerate norm or variance, ...).
struct ValueError : Error {
    using Error::Error;
};

/// Requested Fourier mode counts exceed what the grid can hold.
struct ModeRangeError : Error {
    using Error::Error;
};

/// Initial-condition geometry does not fit inside the domain.
struct GeometryError : Error {
    using Error::Error;
};

/// Random generation could not satisfy its constraints.
struct GenerationError : Error {
    using Error::Error;
};

/// Time step violates the CFL stability bound.
struct StabilityError : Error {
    using Error::Error;
};

/// Dataset construction or splitting failed (too few frames, missing
/// snapshots, empty partition).
struct DataError : Error {
    using Error::Error;
};

/// Binary file (.fnds dataset, .fnck checkpoint) is malformed. Carries
/// the byte offset where parsing stopped.
struct FormatError : Error {
    FormatError(const std::string& what, std::uint64_t offset)
        : Error(what + " (byte offset " + std::to_string(offset) + ")"),
          byte_offset(offset) {}
    std::uint64_t byte_offset = 0;
};

/// Text-grid import failed. Carries the 1-based line number.
struct ParseError : Error {
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_number(line) {}
    std::size_t line_number = 0;
};

/// Optimizer received a non-finite gradient. Names the tensor.
struct OptimError : Error {
    using Error::Error;
};

/// Training loss became non-finite.
struct DivergenceError : Error {
    using Error::Error;
};

}  // namespace fno
