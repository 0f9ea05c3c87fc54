#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "fno/errors.hpp"

namespace fno {

/// Uniform rectangular grid. height counts rows (the y direction), width
/// counts columns (x). Cell (i, j) is centred at ((j+0.5)*dx, (i+0.5)*dy).
struct Grid2D {
    int height = 0;
    int width = 0;
    double dx = 1.0;
    double dy = 1.0;

    std::size_t cells() const {
        return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    }
    void validate() const;
    bool operator==(const Grid2D&) const = default;
};

/// Real-valued field on a Grid2D, row-major.
struct ScalarField2D {
    Grid2D grid;
    std::vector<double> values;

    ScalarField2D() = default;
    explicit ScalarField2D(const Grid2D& g, double fill = 0.0)
        : grid(g), values(g.cells(), fill) {}

    double& at(int i, int j) { return values[static_cast<std::size_t>(i) * grid.width + j]; }
    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * grid.width + j]; }
};

/// Batched channel stack, layout [n][c][height][width].
struct FieldBatch {
    int n = 0;
    int c = 0;
    Grid2D grid;
    std::vector<double> values;

    FieldBatch() = default;
    FieldBatch(int n_, int c_, const Grid2D& g, double fill = 0.0)
        : n(n_), c(c_), grid(g),
          values(static_cast<std::size_t>(n_) * c_ * g.cells(), fill) {}

    std::size_t plane() const { return grid.cells(); }
    double* channel(int sample, int ch) {
        return values.data() + (static_cast<std::size_t>(sample) * c + ch) * plane();
    }
    const double* channel(int sample, int ch) const {
        return values.data() + (static_cast<std::size_t>(sample) * c + ch) * plane();
    }
};

/// Hermitian half spectrum of a real field stack: all kx rows, only the
/// first floor(width/2)+1 ky columns; the rest is implied by symmetry.
struct HalfSpectrum {
    int c = 0;
    int kx_len = 0;  // = grid height
    int ky_len = 0;  // = floor(width/2) + 1
    std::vector<std::complex<double>> coefficients;  // [c][kx_len][ky_len]

    HalfSpectrum() = default;
    HalfSpectrum(int channels, int kx, int ky)
        : c(channels), kx_len(kx), ky_len(ky),
          coefficients(static_cast<std::size_t>(channels) * kx * ky) {}

    std::complex<double>& at(int ch, int kx, int ky) {
        return coefficients[(static_cast<std::size_t>(ch) * kx_len + kx) * ky_len + ky];
    }
    const std::complex<double>& at(int ch, int kx, int ky) const {
        return coefficients[(static_cast<std::size_t>(ch) * kx_len + kx) * ky_len + ky];
    }
};

/// Unnormalized forward DFT over the two spatial axes of every sample,
/// one half spectrum per sample. The DC coefficient equals the plain sum
/// of the field values. Throws ValueError on non-finite input.
std::vector<HalfSpectrum> fft2_real(const FieldBatch& batch);

/// Single-field convenience overload.
HalfSpectrum fft2_real(const ScalarField2D& field);

/// Inverse transform, normalized by 1/(height*width). Accepts arbitrary
/// complex half spectra (Hermitian extension; imaginary parts of the
/// self-conjugate columns are ignored) and always produces a real field
/// stack of one sample. Throws ShapeError on grid/spectrum mismatch.
FieldBatch ifft2_real(const HalfSpectrum& spectrum, const Grid2D& grid);

/// Keeps the two retained corner blocks -- kx rows {0..k_x-1} and
/// {height-k_x..height-1}, ky columns {0..k_y-1} -- and zeroes the rest.
/// Idempotent. Throws ModeRangeError when the counts exceed the spectrum.
HalfSpectrum truncate_modes(const HalfSpectrum& spectrum, int k_x, int k_y);

}  // namespace fno
