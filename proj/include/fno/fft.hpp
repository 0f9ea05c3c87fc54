#pragma once

#include <complex>
#include <map>
#include <memory>
#include <vector>

namespace fno {

/// Scratch buffers for transform execution. Plans are immutable and safe to
/// share across threads; each thread brings its own workspace. Buffers a/b
/// belong to the 1D core, c/d/e to the 2D drivers; keep them distinct so a
/// nested transform never resizes a buffer its caller still points into.
struct FftWorkspace {
    std::vector<std::complex<double>> a, b, c, d, e;
};

/// One-dimensional complex DFT plan for a fixed length. Handles arbitrary
/// lengths: mixed-radix Cooley-Tukey over the prime factorization, direct
/// DFT for small prime factors, Bluestein's chirp-z for large ones, so the
/// cost stays O(n log n).
class Fft1d {
public:
    explicit Fft1d(int n);

    int size() const { return n_; }

    /// out[k] = sum_j in[j] * exp(-2*pi*i*j*k/n). Unnormalized. in/out must
    /// not alias and must hold n elements.
    void forward(const std::complex<double>* in, std::complex<double>* out,
                 FftWorkspace& ws) const;

    /// out[j] = sum_k in[k] * exp(+2*pi*i*j*k/n). Unnormalized.
    void inverse(const std::complex<double>* in, std::complex<double>* out,
                 FftWorkspace& ws) const;

private:
    struct BluesteinPlan {
        int prime = 0;
        int padded = 0;  // power of two >= 2*prime-1
        std::vector<std::complex<double>> chirp;       // e^{-i pi j^2 / prime}
        std::vector<std::complex<double>> kernel_fft;  // FFT of the wrapped conjugate chirp
        std::unique_ptr<Fft1d> fft;                    // power-of-two sub-plan
    };

    void transform(const std::complex<double>* in, std::size_t in_stride,
                   std::complex<double>* out, std::complex<double>* scratch,
                   int n, int tw_stride, std::size_t factor_index,
                   FftWorkspace& ws) const;
    void bluestein(const BluesteinPlan& plan, const std::complex<double>* in,
                   std::size_t in_stride, std::complex<double>* out) const;

    int n_ = 0;
    std::vector<int> factors_;
    std::vector<std::complex<double>> twiddle_;  // e^{-2 pi i k / n}, k in [0, n)
    std::map<int, BluesteinPlan> bluestein_plans_;
};

/// Shared plan cache; plans are immutable once built.
std::shared_ptr<const Fft1d> get_fft_plan(int n);

/// Forward r2c pass over every row of a [height][width] real plane into
/// [height][width/2+1]; two rows share one complex transform. Unnormalized.
void rfft_rows(const double* in, std::complex<double>* out, int height, int width,
               const Fft1d& plan_w, FftWorkspace& ws);

/// Inverse of rfft_rows: per-row Hermitian extension (imaginary parts of the
/// self-conjugate columns ignored), result scaled by `scale`.
void irfft_rows(const std::complex<double>* in, double* out, int height, int width,
                const Fft1d& plan_w, FftWorkspace& ws, double scale);

/// Real-input forward 2D DFT of a row-major [height][width] plane into the
/// Hermitian half spectrum [height][width/2+1]. Unnormalized.
void rfft2_plane(const double* in, std::complex<double>* out, int height, int width,
                 const Fft1d& plan_w, const Fft1d& plan_h, FftWorkspace& ws);

/// Inverse of rfft2_plane, normalized by 1/(height*width). The half spectrum
/// is extended by Hermitian symmetry; imaginary parts of the self-conjugate
/// columns (ky = 0 and, for even width, ky = width/2) are ignored, so the
/// output is real for arbitrary complex input.
void irfft2_plane(const std::complex<double>* in, double* out, int height, int width,
                  const Fft1d& plan_w, const Fft1d& plan_h, FftWorkspace& ws);

}  // namespace fno
