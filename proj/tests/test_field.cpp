#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "fno/field.hpp"
#include "fno/rng.hpp"

using namespace fno;
using cd = std::complex<double>;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Independent O(N^2) DFT oracle over the full spectrum.
std::vector<cd> naive_dft2(const std::vector<double>& f, int h, int w) {
    std::vector<cd> out(static_cast<std::size_t>(h) * w);
    for (int kx = 0; kx < h; ++kx) {
        for (int ky = 0; ky < w; ++ky) {
            cd acc(0.0, 0.0);
            for (int i = 0; i < h; ++i) {
                for (int j = 0; j < w; ++j) {
                    const double phase =
                        -2.0 * kPi * (static_cast<double>(kx) * i / h + static_cast<double>(ky) * j / w);
                    acc += f[static_cast<std::size_t>(i) * w + j] * cd(std::cos(phase), std::sin(phase));
                }
            }
            out[static_cast<std::size_t>(kx) * w + ky] = acc;
        }
    }
    return out;
}

ScalarField2D random_field(int h, int w, std::uint64_t seed) {
    ScalarField2D f(Grid2D{h, w, 1.0, 1.0});
    Rng rng(seed);
    for (double& v : f.values) v = rng.uniform(-1.0, 1.0);
    return f;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("constant field has only DC content") {
    const double c = 2.75;
    ScalarField2D f(Grid2D{8, 8, 1.0, 1.0}, c);
    const HalfSpectrum s = fft2_real(f);
    CHECK(s.at(0, 0, 0).real() == doctest::Approx(64.0 * c).epsilon(1e-14));
    CHECK(std::abs(s.at(0, 0, 0).imag()) <= 1e-12);
    for (int kx = 0; kx < s.kx_len; ++kx)
        for (int ky = 0; ky < s.ky_len; ++ky)
            if (kx != 0 || ky != 0) CHECK(std::abs(s.at(0, kx, ky)) <= 1e-12);
}

TEST_CASE("single cosine along the width lands in mode (0,1)") {
    const int n = 16;
    ScalarField2D f(Grid2D{n, n, 1.0, 1.0});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) f.at(i, j) = std::cos(2.0 * kPi * j / n);
    const HalfSpectrum s = fft2_real(f);
    // Analytic DFT of cos: N^2/2 at (0, +-1); the half spectrum stores (0, 1).
    CHECK(s.at(0, 0, 1).real() == doctest::Approx(n * n / 2.0).epsilon(1e-12));
    for (int kx = 0; kx < s.kx_len; ++kx)
        for (int ky = 0; ky < s.ky_len; ++ky)
            if (!(kx == 0 && ky == 1)) CHECK(std::abs(s.at(0, kx, ky)) <= 1e-10);
}

TEST_CASE("matches the naive DFT oracle on assorted sizes") {
    for (const auto [h, w] : {std::pair{8, 8}, {12, 10}, {9, 7}, {16, 12}, {20, 41}}) {
        const ScalarField2D f = random_field(h, w, 77 + static_cast<std::uint64_t>(h + w));
        const HalfSpectrum s = fft2_real(f);
        const std::vector<cd> oracle = naive_dft2(f.values, h, w);
        for (int kx = 0; kx < h; ++kx) {
            for (int ky = 0; ky < w / 2 + 1; ++ky) {
                const cd got = s.at(0, kx, ky);
                const cd want = oracle[static_cast<std::size_t>(kx) * w + ky];
                CHECK(std::abs(got - want) <= 1e-9 * std::max(1.0, std::abs(want)));
            }
        }
    }
}

TEST_CASE("round trip is the identity to 1e-10") {
    for (const auto [h, w] :
         {std::pair{12, 12}, {64, 64}, {41, 23}, {84, 84}, {164, 164}, {256, 256}}) {
        const ScalarField2D f = random_field(h, w, 1000 + static_cast<std::uint64_t>(h));
        const HalfSpectrum s = fft2_real(f);
        const FieldBatch back = ifft2_real(s, f.grid);
        CHECK(max_abs_diff(back.values, f.values) <= 1e-10);
    }
}

TEST_CASE("zero and DC-only spectra invert as expected") {
    const Grid2D grid{8, 8, 1.0, 1.0};
    HalfSpectrum zero(1, 8, 5);
    const FieldBatch z = ifft2_real(zero, grid);
    for (double v : z.values) CHECK(v == 0.0);

    HalfSpectrum dc(1, 8, 5);
    dc.at(0, 0, 0) = cd(64.0 * 3.25, 0.0);
    const FieldBatch c = ifft2_real(dc, grid);
    for (double v : c.values) CHECK(v == doctest::Approx(3.25).epsilon(1e-14));
}

TEST_CASE("Parseval holds with Hermitian pair accounting") {
    for (const auto [h, w] : {std::pair{16, 16}, {12, 9}, {30, 14}}) {
        const ScalarField2D f = random_field(h, w, 5 + static_cast<std::uint64_t>(h * w));
        const HalfSpectrum s = fft2_real(f);
        double space = 0.0;
        for (double v : f.values) space += v * v;
        double freq = 0.0;
        const bool even = (w % 2) == 0;
        for (int kx = 0; kx < h; ++kx) {
            for (int ky = 0; ky < s.ky_len; ++ky) {
                const double weight = (ky == 0 || (even && ky == w / 2)) ? 1.0 : 2.0;
                freq += weight * std::norm(s.at(0, kx, ky));
            }
        }
        freq /= static_cast<double>(h) * w;
        CHECK(freq == doctest::Approx(space).epsilon(1e-10));
    }
}

TEST_CASE("linearity") {
    const int h = 12, w = 14;
    const ScalarField2D f = random_field(h, w, 31);
    const ScalarField2D g = random_field(h, w, 32);
    const double a = 1.7, b = -0.45;
    ScalarField2D combo(f.grid);
    for (std::size_t i = 0; i < combo.values.size(); ++i)
        combo.values[i] = a * f.values[i] + b * g.values[i];
    const HalfSpectrum sc = fft2_real(combo);
    const HalfSpectrum sf = fft2_real(f);
    const HalfSpectrum sg = fft2_real(g);
    for (std::size_t i = 0; i < sc.coefficients.size(); ++i) {
        const cd want = a * sf.coefficients[i] + b * sg.coefficients[i];
        CHECK(std::abs(sc.coefficients[i] - want) <= 1e-10 * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("batch transform matches per-sample transforms") {
    const Grid2D grid{10, 12, 1.0, 1.0};
    FieldBatch batch(3, 2, grid);
    Rng rng(99);
    for (double& v : batch.values) v = rng.uniform(-2.0, 2.0);
    const auto spectra = fft2_real(batch);
    REQUIRE(spectra.size() == 3);
    for (int s = 0; s < 3; ++s) {
        for (int ch = 0; ch < 2; ++ch) {
            ScalarField2D f(grid);
            std::copy_n(batch.channel(s, ch), grid.cells(), f.values.begin());
            const HalfSpectrum single = fft2_real(f);
            for (int kx = 0; kx < single.kx_len; ++kx)
                for (int ky = 0; ky < single.ky_len; ++ky)
                    CHECK(std::abs(spectra[static_cast<std::size_t>(s)].at(ch, kx, ky) -
                                   single.at(0, kx, ky)) <= 1e-12);
        }
    }
}

TEST_CASE("truncation: idempotent, norm-nonincreasing, identity at full extent") {
    const ScalarField2D f = random_field(16, 16, 4242);
    const HalfSpectrum s = fft2_real(f);

    const HalfSpectrum t1 = truncate_modes(s, 4, 4);
    const HalfSpectrum t2 = truncate_modes(t1, 4, 4);
    for (std::size_t i = 0; i < t1.coefficients.size(); ++i)
        CHECK(t1.coefficients[i] == t2.coefficients[i]);

    double norm_full = 0.0, norm_trunc = 0.0;
    for (const cd& v : s.coefficients) norm_full += std::norm(v);
    for (const cd& v : t1.coefficients) norm_trunc += std::norm(v);
    CHECK(norm_trunc <= norm_full + 1e-12);

    const HalfSpectrum full = truncate_modes(s, 8, 9);  // ceil(16/2), 16/2+1
    for (std::size_t i = 0; i < s.coefficients.size(); ++i)
        CHECK(full.coefficients[i] == s.coefficients[i]);
}

TEST_CASE("retained single-mode cosine is unchanged by truncation") {
    const int n = 16;
    ScalarField2D f(Grid2D{n, n, 1.0, 1.0});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) f.at(i, j) = std::cos(2.0 * kPi * (2.0 * i + 3.0 * j) / n);
    const HalfSpectrum s = fft2_real(f);
    const HalfSpectrum t = truncate_modes(s, 4, 4);  // keeps (2, 3) and its mirror (n-2, 3)
    for (std::size_t i = 0; i < s.coefficients.size(); ++i)
        CHECK(std::abs(t.coefficients[i] - s.coefficients[i]) <= 1e-9);
}

TEST_CASE("mode counts beyond the spectrum are rejected") {
    const ScalarField2D f = random_field(8, 8, 1);
    const HalfSpectrum s = fft2_real(f);
    CHECK_THROWS_AS(truncate_modes(s, 5, 2), ModeRangeError);
    CHECK_THROWS_AS(truncate_modes(s, 2, 6), ModeRangeError);
}

TEST_CASE("non-finite input rejected") {
    FieldBatch b(1, 1, Grid2D{8, 8, 1.0, 1.0});
    b.values[10] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(fft2_real(b), ValueError);
}

TEST_CASE("spectrum/grid mismatch rejected") {
    HalfSpectrum s(1, 8, 5);
    CHECK_THROWS_AS(ifft2_real(s, Grid2D{10, 8, 1.0, 1.0}), ShapeError);
    CHECK_THROWS_AS(ifft2_real(s, Grid2D{8, 10, 1.0, 1.0}), ShapeError);
}

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(Grid2D({3, 8, 1.0, 1.0}).validate(), ShapeError);
    CHECK_THROWS_AS(Grid2D({8, 8, 0.0, 1.0}).validate(), ValueError);
}
