#include "fno/fft.hpp"

#include <cassert>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace fno {

namespace {

using cd = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;

// Largest prime factor handled by the direct O(p^2) combine step; beyond
// this Bluestein keeps the cost O(n log n).
constexpr int kDirectPrimeLimit = 61;

std::vector<int> factorize(int n) {
    std::vector<int> factors;
    for (int p = 2; p * p <= n; p == 2 ? p = 3 : p += 2) {
        while (n % p == 0) {
            factors.push_back(p);
            n /= p;
        }
    }
    if (n > 1) factors.push_back(n);
    return factors;
}

int next_pow2(int n) {
    int m = 1;
    while (m < n) m *= 2;
    return m;
}

}  // namespace

Fft1d::Fft1d(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("Fft1d: length must be >= 1");
    factors_ = factorize(n);
    twiddle_.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double angle = -2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
        twiddle_[static_cast<std::size_t>(k)] = cd(std::cos(angle), std::sin(angle));
    }
    for (int p : factors_) {
        if (p <= kDirectPrimeLimit || bluestein_plans_.count(p)) continue;
        BluesteinPlan plan;
        plan.prime = p;
        plan.padded = next_pow2(2 * p - 1);
        plan.chirp.resize(static_cast<std::size_t>(p));
        for (int j = 0; j < p; ++j) {
            // j^2 mod 2p keeps the phase argument small.
            const long long j2 = (static_cast<long long>(j) * j) % (2LL * p);
            const double angle = -kPi * static_cast<double>(j2) / static_cast<double>(p);
            plan.chirp[static_cast<std::size_t>(j)] = cd(std::cos(angle), std::sin(angle));
        }
        plan.fft = std::make_unique<Fft1d>(plan.padded);
        std::vector<cd> kernel(static_cast<std::size_t>(plan.padded), cd(0.0, 0.0));
        for (int j = 0; j < p; ++j) {
            const cd b = std::conj(plan.chirp[static_cast<std::size_t>(j)]);
            kernel[static_cast<std::size_t>(j)] = b;
            if (j > 0) kernel[static_cast<std::size_t>(plan.padded - j)] = b;
        }
        plan.kernel_fft.resize(static_cast<std::size_t>(plan.padded));
        FftWorkspace ws;
        plan.fft->forward(kernel.data(), plan.kernel_fft.data(), ws);
        bluestein_plans_.emplace(p, std::move(plan));
    }
}

void Fft1d::forward(const cd* in, cd* out, FftWorkspace& ws) const {
    if (n_ == 1) {
        out[0] = in[0];
        return;
    }
    ws.a.resize(static_cast<std::size_t>(n_));
    transform(in, 1, out, ws.a.data(), n_, 1, 0, ws);
}

void Fft1d::inverse(const cd* in, cd* out, FftWorkspace& ws) const {
    ws.b.resize(static_cast<std::size_t>(n_));
    for (int k = 0; k < n_; ++k) ws.b[static_cast<std::size_t>(k)] = std::conj(in[k]);
    if (n_ == 1) {
        out[0] = ws.b[0];
        return;
    }
    ws.a.resize(static_cast<std::size_t>(n_));
    // conj(forward(conj(x))) realizes the unnormalized inverse.
    transform(ws.b.data(), 1, out, ws.a.data(), n_, 1, 0, ws);
    for (int k = 0; k < n_; ++k) out[k] = std::conj(out[k]);
}

void Fft1d::transform(const cd* in, std::size_t in_stride, cd* out, cd* scratch,
                      int n, int tw_stride, std::size_t factor_index,
                      FftWorkspace& ws) const {
    if (n == 1) {
        out[0] = in[0];
        return;
    }
    const int p = factors_[factor_index];
    if (p == n && p > kDirectPrimeLimit) {
        bluestein(bluestein_plans_.at(p), in, in_stride, out);
        return;
    }
    const int m = n / p;
    // Decimate in time: sub-transform r covers in[r], in[r+p], ... The sub
    // result lands in scratch; the sibling block of out serves as the sub
    // call's own scratch.
    for (int r = 0; r < p; ++r) {
        transform(in + static_cast<std::size_t>(r) * in_stride,
                  in_stride * static_cast<std::size_t>(p),
                  scratch + static_cast<std::size_t>(r) * m,
                  out + static_cast<std::size_t>(r) * m, m, tw_stride * p,
                  factor_index + 1, ws);
    }
    // Combine: X[s*m+q] = sum_r w_n^{r*q} * w_p^{r*s} * Y_r[q].
    const auto tw = [&](long long index) -> cd {
        return twiddle_[static_cast<std::size_t>(index % n_)];
    };
    if (p == 2) {
        for (int q = 0; q < m; ++q) {
            const cd y0 = scratch[q];
            const cd y1 = tw(static_cast<long long>(q) * tw_stride) * scratch[m + q];
            out[q] = y0 + y1;
            out[m + q] = y0 - y1;
        }
        return;
    }
    const long long wp_step = n_ / p;  // global twiddle index of w_p
    cd z[kDirectPrimeLimit];
    for (int q = 0; q < m; ++q) {
        for (int r = 0; r < p; ++r) {
            z[r] = tw(static_cast<long long>(r) * q * tw_stride) *
                   scratch[static_cast<std::size_t>(r) * m + q];
        }
        for (int s = 0; s < p; ++s) {
            cd acc = z[0];
            for (int r = 1; r < p; ++r) {
                acc += tw(static_cast<long long>((r * s) % p) * wp_step) * z[r];
            }
            out[static_cast<std::size_t>(s) * m + q] = acc;
        }
    }
}

void Fft1d::bluestein(const BluesteinPlan& plan, const cd* in, std::size_t in_stride,
                      cd* out) const {
    // Local buffers: this path must not touch the caller's workspace, whose
    // pointers are live across the recursion.
    const int p = plan.prime;
    const int M = plan.padded;
    std::vector<cd> a(static_cast<std::size_t>(M), cd(0.0, 0.0));
    std::vector<cd> A(static_cast<std::size_t>(M));
    for (int j = 0; j < p; ++j) {
        a[static_cast<std::size_t>(j)] = in[static_cast<std::size_t>(j) * in_stride] * plan.chirp[static_cast<std::size_t>(j)];
    }
    FftWorkspace sub;
    plan.fft->forward(a.data(), A.data(), sub);
    for (int k = 0; k < M; ++k) A[static_cast<std::size_t>(k)] *= plan.kernel_fft[static_cast<std::size_t>(k)];
    plan.fft->inverse(A.data(), a.data(), sub);
    const double inv_m = 1.0 / static_cast<double>(M);
    for (int k = 0; k < p; ++k) {
        out[k] = a[static_cast<std::size_t>(k)] * plan.chirp[static_cast<std::size_t>(k)] * inv_m;
    }
}

std::shared_ptr<const Fft1d> get_fft_plan(int n) {
    static std::mutex mutex;
    static std::map<int, std::shared_ptr<const Fft1d>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    auto plan = std::make_shared<const Fft1d>(n);
    cache.emplace(n, plan);
    return plan;
}

void rfft_rows(const double* in, cd* out, int height, int width, const Fft1d& plan_w,
               FftWorkspace& ws) {
    assert(plan_w.size() == width);
    const int half = width / 2 + 1;
    std::vector<cd>& row = ws.c;
    std::vector<cd>& spec = ws.d;
    row.resize(static_cast<std::size_t>(width));
    spec.resize(static_cast<std::size_t>(width));

    // Two real rows per complex transform.
    int x = 0;
    for (; x + 1 < height; x += 2) {
        const double* r0 = in + static_cast<std::size_t>(x) * width;
        const double* r1 = r0 + width;
        for (int j = 0; j < width; ++j) row[static_cast<std::size_t>(j)] = cd(r0[j], r1[j]);
        plan_w.forward(row.data(), spec.data(), ws);
        cd* o0 = out + static_cast<std::size_t>(x) * half;
        cd* o1 = o0 + half;
        for (int k = 0; k < half; ++k) {
            const cd zk = spec[static_cast<std::size_t>(k)];
            const cd zm = std::conj(spec[static_cast<std::size_t>((width - k) % width)]);
            o0[k] = 0.5 * (zk + zm);
            o1[k] = cd(0.0, -0.5) * (zk - zm);
        }
    }
    if (x < height) {
        const double* r0 = in + static_cast<std::size_t>(x) * width;
        for (int j = 0; j < width; ++j) row[static_cast<std::size_t>(j)] = cd(r0[j], 0.0);
        plan_w.forward(row.data(), spec.data(), ws);
        cd* o0 = out + static_cast<std::size_t>(x) * half;
        for (int k = 0; k < half; ++k) o0[k] = spec[static_cast<std::size_t>(k)];
    }
}

void irfft_rows(const cd* in, double* out, int height, int width, const Fft1d& plan_w,
                FftWorkspace& ws, double scale) {
    assert(plan_w.size() == width);
    const int half = width / 2 + 1;
    const bool even = (width % 2) == 0;
    std::vector<cd>& full = ws.c;
    std::vector<cd>& time = ws.d;
    full.resize(static_cast<std::size_t>(width));
    time.resize(static_cast<std::size_t>(width));
    const auto clean = [&](cd v, int k) -> cd {
        if (k == 0 || (even && k == width / 2)) return cd(v.real(), 0.0);
        return v;
    };
    int x = 0;
    for (; x + 1 < height; x += 2) {
        const cd* s0 = in + static_cast<std::size_t>(x) * half;
        const cd* s1 = s0 + half;
        for (int k = 0; k < half; ++k) {
            full[static_cast<std::size_t>(k)] = clean(s0[k], k) + cd(0.0, 1.0) * clean(s1[k], k);
        }
        for (int k = half; k < width; ++k) {
            const int km = width - k;
            full[static_cast<std::size_t>(k)] =
                std::conj(clean(s0[km], km)) + cd(0.0, 1.0) * std::conj(clean(s1[km], km));
        }
        plan_w.inverse(full.data(), time.data(), ws);
        double* o0 = out + static_cast<std::size_t>(x) * width;
        double* o1 = o0 + width;
        for (int j = 0; j < width; ++j) {
            o0[j] = time[static_cast<std::size_t>(j)].real() * scale;
            o1[j] = time[static_cast<std::size_t>(j)].imag() * scale;
        }
    }
    if (x < height) {
        const cd* s0 = in + static_cast<std::size_t>(x) * half;
        for (int k = 0; k < half; ++k) full[static_cast<std::size_t>(k)] = clean(s0[k], k);
        for (int k = half; k < width; ++k) full[static_cast<std::size_t>(k)] = std::conj(clean(s0[width - k], width - k));
        plan_w.inverse(full.data(), time.data(), ws);
        double* o0 = out + static_cast<std::size_t>(x) * width;
        for (int j = 0; j < width; ++j) o0[j] = time[static_cast<std::size_t>(j)].real() * scale;
    }
}

void rfft2_plane(const double* in, cd* out, int height, int width,
                 const Fft1d& plan_w, const Fft1d& plan_h, FftWorkspace& ws) {
    assert(plan_h.size() == height);
    const int half = width / 2 + 1;
    rfft_rows(in, out, height, width, plan_w, ws);

    // Column pass: full complex transform down each stored column.
    std::vector<cd>& col = ws.c;
    std::vector<cd>& colspec = ws.d;
    col.resize(static_cast<std::size_t>(height));
    colspec.resize(static_cast<std::size_t>(height));
    for (int k = 0; k < half; ++k) {
        for (int i = 0; i < height; ++i) col[static_cast<std::size_t>(i)] = out[static_cast<std::size_t>(i) * half + k];
        plan_h.forward(col.data(), colspec.data(), ws);
        for (int i = 0; i < height; ++i) out[static_cast<std::size_t>(i) * half + k] = colspec[static_cast<std::size_t>(i)];
    }
}

void irfft2_plane(const cd* in, double* out, int height, int width,
                  const Fft1d& plan_w, const Fft1d& plan_h, FftWorkspace& ws) {
    assert(plan_w.size() == width && plan_h.size() == height);
    const int half = width / 2 + 1;
    const double scale = 1.0 / (static_cast<double>(height) * static_cast<double>(width));

    std::vector<cd>& inter = ws.e;
    inter.resize(static_cast<std::size_t>(height) * half);

    std::vector<cd>& col = ws.c;
    std::vector<cd>& colspec = ws.d;
    col.resize(static_cast<std::size_t>(height));
    colspec.resize(static_cast<std::size_t>(height));
    for (int k = 0; k < half; ++k) {
        for (int i = 0; i < height; ++i) col[static_cast<std::size_t>(i)] = in[static_cast<std::size_t>(i) * half + k];
        plan_h.inverse(col.data(), colspec.data(), ws);
        for (int i = 0; i < height; ++i) inter[static_cast<std::size_t>(i) * half + k] = colspec[static_cast<std::size_t>(i)];
    }

    irfft_rows(inter.data(), out, height, width, plan_w, ws, scale);
}

}  // namespace fno
