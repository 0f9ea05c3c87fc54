#include "fno/field.hpp"

#include <cmath>
#include <string>

#include "fno/fft.hpp"
#include "fno/parallel.hpp"

namespace fno {

void Grid2D::validate() const {
    if (height < 4 || width < 4)
        throw ShapeError("grid must be at least 4x4, got " + std::to_string(height) + "x" +
                         std::to_string(width));
    if (!(dx > 0.0) || !(dy > 0.0)) throw ValueError("grid spacing must be positive");
}

std::vector<HalfSpectrum> fft2_real(const FieldBatch& batch) {
    batch.grid.validate();
    for (double v : batch.values) {
        if (!std::isfinite(v)) throw ValueError("fft2_real: field contains non-finite values");
    }
    const int h = batch.grid.height;
    const int w = batch.grid.width;
    const int half = w / 2 + 1;
    auto plan_w = get_fft_plan(w);
    auto plan_h = get_fft_plan(h);

    std::vector<HalfSpectrum> out(static_cast<std::size_t>(batch.n));
    for (auto& s : out) s = HalfSpectrum(batch.c, h, half);

    const std::size_t jobs = static_cast<std::size_t>(batch.n) * batch.c;
    parallel_for(jobs, [&](std::size_t begin, std::size_t end) {
        FftWorkspace ws;
        for (std::size_t job = begin; job < end; ++job) {
            const int sample = static_cast<int>(job / batch.c);
            const int ch = static_cast<int>(job % batch.c);
            rfft2_plane(batch.channel(sample, ch), &out[static_cast<std::size_t>(sample)].at(ch, 0, 0),
                        h, w, *plan_w, *plan_h, ws);
        }
    });
    return out;
}

HalfSpectrum fft2_real(const ScalarField2D& field) {
    FieldBatch batch(1, 1, field.grid);
    batch.values = field.values;
    return fft2_real(batch)[0];
}

FieldBatch ifft2_real(const HalfSpectrum& spectrum, const Grid2D& grid) {
    grid.validate();
    if (spectrum.kx_len != grid.height || spectrum.ky_len != grid.width / 2 + 1)
        throw ShapeError("ifft2_real: spectrum extents " + std::to_string(spectrum.kx_len) + "x" +
                         std::to_string(spectrum.ky_len) + " do not match grid " +
                         std::to_string(grid.height) + "x" + std::to_string(grid.width));
    auto plan_w = get_fft_plan(grid.width);
    auto plan_h = get_fft_plan(grid.height);
    FieldBatch out(1, spectrum.c, grid);
    parallel_for(static_cast<std::size_t>(spectrum.c), [&](std::size_t begin, std::size_t end) {
        FftWorkspace ws;
        for (std::size_t ch = begin; ch < end; ++ch) {
            irfft2_plane(&spectrum.at(static_cast<int>(ch), 0, 0), out.channel(0, static_cast<int>(ch)),
                         grid.height, grid.width, *plan_w, *plan_h, ws);
        }
    });
    return out;
}

HalfSpectrum truncate_modes(const HalfSpectrum& spectrum, int k_x, int k_y) {
    const int h = spectrum.kx_len;
    if (k_x < 0 || k_x > (h + 1) / 2 || k_y < 0 || k_y > spectrum.ky_len)
        throw ModeRangeError("truncate_modes: mode counts (" + std::to_string(k_x) + ", " +
                             std::to_string(k_y) + ") exceed spectrum extents " +
                             std::to_string(h) + "x" + std::to_string(spectrum.ky_len));
    HalfSpectrum out(spectrum.c, spectrum.kx_len, spectrum.ky_len);
    for (int ch = 0; ch < spectrum.c; ++ch) {
        for (int kx = 0; kx < h; ++kx) {
            const bool keep_row = kx < k_x || kx >= h - k_x;
            if (!keep_row) continue;
            for (int ky = 0; ky < k_y; ++ky) out.at(ch, kx, ky) = spectrum.at(ch, kx, ky);
        }
    }
    return out;
}

}  // namespace fno
