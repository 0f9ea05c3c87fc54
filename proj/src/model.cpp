#include "fno/model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>

#include "fno/fft.hpp"
#include "fno/io.hpp"
#include "fno/parallel.hpp"
#include "fno/rng.hpp"

namespace fno {

namespace {

using cd = std::complex<double>;

constexpr double kNormEps = 1e-5;

// Dot product with four independent accumulators combined in a fixed order:
// deterministic and pipelined without FP reassociation.
inline double dot4(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return ((s0 + s1) + (s2 + s3)) + tail;
}

inline double sum4(const double* a, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i];
        s1 += a[i + 1];
        s2 += a[i + 2];
        s3 += a[i + 3];
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i];
    return ((s0 + s1) + (s2 + s3)) + tail;
}

inline void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

// Row index of retained mode slot r in [0, 2*k_x): low rows first, then the
// mirrored high rows.
inline int retained_row(int r, int k_x, int height) {
    return r < k_x ? r : height - 2 * k_x + r;
}

void check_grid_fits_modes(const Grid2D& grid, int k_x, int k_y) {
    if (grid.height < 2 * k_x || grid.width < 2 * k_y)
        throw ModeRangeError("grid " + std::to_string(grid.height) + "x" +
                             std::to_string(grid.width) + " too small for modes (" +
                             std::to_string(k_x) + ", " + std::to_string(k_y) + ")");
}

// Packed retained-mode spectra for a batch: separate re/im arrays indexed
// [sample][mode][channel].
struct PackedSpectra {
    std::vector<double> re, im;
    std::size_t modes = 0;
    int channels = 0;

    void resize(int n, std::size_t m, int c) {
        modes = m;
        channels = c;
        re.assign(static_cast<std::size_t>(n) * m * c, 0.0);
        im.assign(static_cast<std::size_t>(n) * m * c, 0.0);
    }
    std::size_t at(int sample, std::size_t mode, int ch) const {
        return (static_cast<std::size_t>(sample) * modes + mode) * channels + ch;
    }
};

// Forward transform of one plane, keeping only the retained corner modes;
// writes into the packed arrays with channel stride.
void gather_retained(const double* plane, int height, int width, int k_x, int k_y,
                     const Fft1d& plan_w, const Fft1d& plan_h, FftWorkspace& ws,
                     std::vector<cd>& rowspec, double* out_re, double* out_im, int stride) {
    const int half = width / 2 + 1;
    rowspec.resize(static_cast<std::size_t>(height) * half);
    rfft_rows(plane, rowspec.data(), height, width, plan_w, ws);
    std::vector<cd>& col = ws.c;
    std::vector<cd>& colspec = ws.d;
    col.resize(static_cast<std::size_t>(height));
    colspec.resize(static_cast<std::size_t>(height));
    for (int q = 0; q < k_y; ++q) {
        for (int i = 0; i < height; ++i) col[static_cast<std::size_t>(i)] = rowspec[static_cast<std::size_t>(i) * half + q];
        plan_h.forward(col.data(), colspec.data(), ws);
        for (int r = 0; r < 2 * k_x; ++r) {
            const cd v = colspec[static_cast<std::size_t>(retained_row(r, k_x, height))];
            const std::size_t slot = static_cast<std::size_t>(r * k_y + q) * stride;
            out_re[slot] = v.real();
            out_im[slot] = v.imag();
        }
    }
}

// Inverse transform of packed retained modes (all other modes zero) into a
// real plane, normalized by 1/(H*W).
void scatter_inverse(const double* in_re, const double* in_im, int stride, int height,
                     int width, int k_x, int k_y, const Fft1d& plan_w, const Fft1d& plan_h,
                     FftWorkspace& ws, std::vector<cd>& inter, double* plane_out) {
    const int half = width / 2 + 1;
    inter.assign(static_cast<std::size_t>(height) * half, cd(0.0, 0.0));
    std::vector<cd>& col = ws.c;
    std::vector<cd>& colfull = ws.d;
    col.resize(static_cast<std::size_t>(height));
    colfull.resize(static_cast<std::size_t>(height));
    for (int q = 0; q < k_y; ++q) {
        std::fill(col.begin(), col.end(), cd(0.0, 0.0));
        for (int r = 0; r < 2 * k_x; ++r) {
            const std::size_t slot = static_cast<std::size_t>(r * k_y + q) * stride;
            col[static_cast<std::size_t>(retained_row(r, k_x, height))] = cd(in_re[slot], in_im[slot]);
        }
        plan_h.inverse(col.data(), colfull.data(), ws);
        for (int i = 0; i < height; ++i) inter[static_cast<std::size_t>(i) * half + q] = colfull[static_cast<std::size_t>(i)];
    }
    irfft_rows(inter.data(), plane_out, height, width, plan_w, ws,
               1.0 / (static_cast<double>(height) * static_cast<double>(width)));
}

// out[s][k][h] = sum_j R_k[h][j] * v[s][k][j] over the retained modes.
void mode_multiply(const SpectralLayer& layer, const PackedSpectra& v, PackedSpectra& out, int n) {
    const int dv = layer.d_v;
    const std::size_t modes = layer.modes();
    out.resize(n, modes, dv);
    parallel_for(modes, [&](std::size_t kb, std::size_t ke) {
        for (std::size_t k = kb; k < ke; ++k) {
            const double* rre_block = layer.r_re.data() + k * dv * dv;
            const double* rim_block = layer.r_im.data() + k * dv * dv;
            for (int s = 0; s < n; ++s) {
                const double* vre = v.re.data() + v.at(s, k, 0);
                const double* vim = v.im.data() + v.at(s, k, 0);
                double* ore = out.re.data() + out.at(s, k, 0);
                double* oim = out.im.data() + out.at(s, k, 0);
                for (int h = 0; h < dv; ++h) {
                    const double* rre = rre_block + static_cast<std::size_t>(h) * dv;
                    const double* rim = rim_block + static_cast<std::size_t>(h) * dv;
                    // (a+ib)(c+id): four interleaved accumulator pairs keep
                    // the FP order fixed while breaking the dependency chain.
                    double re0 = 0.0, re1 = 0.0, re2 = 0.0, re3 = 0.0;
                    double im0 = 0.0, im1 = 0.0, im2 = 0.0, im3 = 0.0;
                    int j = 0;
                    for (; j + 4 <= dv; j += 4) {
                        re0 += rre[j] * vre[j] - rim[j] * vim[j];
                        im0 += rre[j] * vim[j] + rim[j] * vre[j];
                        re1 += rre[j + 1] * vre[j + 1] - rim[j + 1] * vim[j + 1];
                        im1 += rre[j + 1] * vim[j + 1] + rim[j + 1] * vre[j + 1];
                        re2 += rre[j + 2] * vre[j + 2] - rim[j + 2] * vim[j + 2];
                        im2 += rre[j + 2] * vim[j + 2] + rim[j + 2] * vre[j + 2];
                        re3 += rre[j + 3] * vre[j + 3] - rim[j + 3] * vim[j + 3];
                        im3 += rre[j + 3] * vim[j + 3] + rim[j + 3] * vre[j + 3];
                    }
                    double ret = 0.0, imt = 0.0;
                    for (; j < dv; ++j) {
                        ret += rre[j] * vre[j] - rim[j] * vim[j];
                        imt += rre[j] * vim[j] + rim[j] * vre[j];
                    }
                    ore[h] = ((re0 + re1) + (re2 + re3)) + ret;
                    oim[h] = ((im0 + im1) + (im2 + im3)) + imt;
                }
            }
        }
    });
}

// out[s][k][j] = sum_h conj(R_k[h][j]) * g[s][k][h].
void mode_multiply_adjoint(const SpectralLayer& layer, const PackedSpectra& g,
                           PackedSpectra& out, int n) {
    const int dv = layer.d_v;
    const std::size_t modes = layer.modes();
    out.resize(n, modes, dv);
    parallel_for(modes, [&](std::size_t kb, std::size_t ke) {
        for (std::size_t k = kb; k < ke; ++k) {
            const double* rre_block = layer.r_re.data() + k * dv * dv;
            const double* rim_block = layer.r_im.data() + k * dv * dv;
            for (int s = 0; s < n; ++s) {
                const double* gre = g.re.data() + g.at(s, k, 0);
                const double* gim = g.im.data() + g.at(s, k, 0);
                double* ore = out.re.data() + out.at(s, k, 0);
                double* oim = out.im.data() + out.at(s, k, 0);
                for (int h = 0; h < dv; ++h) {
                    const double* rre = rre_block + static_cast<std::size_t>(h) * dv;
                    const double* rim = rim_block + static_cast<std::size_t>(h) * dv;
                    const double cre = gre[h];
                    const double cim = gim[h];
                    // conj(R)*c accumulated row-wise so R streams contiguously.
                    for (int j = 0; j < dv; ++j) {
                        ore[j] += rre[j] * cre + rim[j] * cim;
                        oim[j] += rre[j] * cim - rim[j] * cre;
                    }
                }
            }
        }
    });
}

struct SpectralPlans {
    std::shared_ptr<const Fft1d> w, h;
};

SpectralPlans plans_for(const Grid2D& grid) {
    return {get_fft_plan(grid.width), get_fft_plan(grid.height)};
}

// Batched spectral convolution; optionally keeps the input spectra for the
// backward pass.
void spectral_forward(const SpectralLayer& layer, const FieldBatch& v, FieldBatch& out,
                      PackedSpectra* keep_vhat) {
    check_grid_fits_modes(v.grid, layer.k_x, layer.k_y);
    const SpectralPlans plans = plans_for(v.grid);
    const int n = v.n;
    const int dv = layer.d_v;
    const std::size_t modes = layer.modes();

    PackedSpectra local;
    PackedSpectra& vhat = keep_vhat ? *keep_vhat : local;
    vhat.resize(n, modes, dv);

    const std::size_t jobs = static_cast<std::size_t>(n) * dv;
    parallel_for(jobs, [&](std::size_t begin, std::size_t end) {
        FftWorkspace ws;
        std::vector<cd> rowspec;
        for (std::size_t job = begin; job < end; ++job) {
            const int s = static_cast<int>(job / dv);
            const int ch = static_cast<int>(job % dv);
            gather_retained(v.channel(s, ch), v.grid.height, v.grid.width, layer.k_x, layer.k_y,
                            *plans.w, *plans.h, ws, rowspec,
                            vhat.re.data() + vhat.at(s, 0, ch), vhat.im.data() + vhat.at(s, 0, ch),
                            dv);
        }
    });

    PackedSpectra mhat;
    mode_multiply(layer, vhat, mhat, n);

    parallel_for(jobs, [&](std::size_t begin, std::size_t end) {
        FftWorkspace ws;
        std::vector<cd> inter;
        for (std::size_t job = begin; job < end; ++job) {
            const int s = static_cast<int>(job / dv);
            const int ch = static_cast<int>(job % dv);
            scatter_inverse(mhat.re.data() + mhat.at(s, 0, ch), mhat.im.data() + mhat.at(s, 0, ch),
                            dv, v.grid.height, v.grid.width, layer.k_x, layer.k_y, *plans.w,
                            *plans.h, ws, inter, out.channel(s, ch));
        }
    });
}

// y[s][h][:] = sum_j M[h][j] * x[s][j][:]  (pointwise channel mixing).
void channel_matmul(const std::vector<double>& m, int rows, int cols, const FieldBatch& x,
                    FieldBatch& y) {
    const std::size_t plane = x.plane();
    const std::size_t jobs = static_cast<std::size_t>(x.n) * rows;
    parallel_for(jobs, [&](std::size_t begin, std::size_t end) {
        for (std::size_t job = begin; job < end; ++job) {
            const int s = static_cast<int>(job / rows);
            const int h = static_cast<int>(job % rows);
            double* out = y.channel(s, h);
            std::fill(out, out + plane, 0.0);
            const double* mrow = m.data() + static_cast<std::size_t>(h) * cols;
            for (int j = 0; j < cols; ++j) {
                if (mrow[j] != 0.0) axpy(mrow[j], x.channel(s, j), out, plane);
            }
        }
    });
}

// Adds y[s][j][:] += sum_h M[h][j] * g[s][h][:]  (transposed mixing).
void channel_matmul_transposed_add(const std::vector<double>& m, int rows, int cols,
                                   const FieldBatch& g, FieldBatch& y) {
    const std::size_t plane = g.plane();
    const std::size_t jobs = static_cast<std::size_t>(g.n) * cols;
    parallel_for(jobs, [&](std::size_t begin, std::size_t end) {
        for (std::size_t job = begin; job < end; ++job) {
            const int s = static_cast<int>(job / cols);
            const int j = static_cast<int>(job % cols);
            double* out = y.channel(s, j);
            for (int h = 0; h < rows; ++h) {
                const double w = m[static_cast<std::size_t>(h) * cols + j];
                if (w != 0.0) axpy(w, g.channel(s, h), out, plane);
            }
        }
    });
}

// grad_m[h][j] += sum_s dot(g[s][h], x[s][j]).
void matmul_weight_grad(const FieldBatch& g, int rows, const FieldBatch& x, int cols,
                        std::vector<double>& grad_m) {
    const std::size_t plane = g.plane();
    parallel_for(static_cast<std::size_t>(rows), [&](std::size_t hb, std::size_t he) {
        for (std::size_t h = hb; h < he; ++h) {
            double* grow = grad_m.data() + h * cols;
            for (int s = 0; s < g.n; ++s) {
                const double* grad_plane = g.channel(s, static_cast<int>(h));
                for (int j = 0; j < cols; ++j) {
                    grow[j] += dot4(grad_plane, x.channel(s, j), plane);
                }
            }
        }
    });
}

void add_bias(FieldBatch& z, const std::vector<double>& b) {
    const std::size_t plane = z.plane();
    parallel_for(static_cast<std::size_t>(z.n) * z.c, [&](std::size_t begin, std::size_t end) {
        for (std::size_t job = begin; job < end; ++job) {
            const int s = static_cast<int>(job / z.c);
            const int ch = static_cast<int>(job % z.c);
            double* plane_ptr = z.channel(s, ch);
            const double bias = b[static_cast<std::size_t>(ch)];
            for (std::size_t p = 0; p < plane; ++p) plane_ptr[p] += bias;
        }
    });
}

// Per (sample, channel) standardization over space followed by the affine
// scale/shift; records mean and std for the backward pass.
void norm_forward(FieldBatch& z, const SpectralLayer& layer, std::vector<double>& mu,
                  std::vector<double>& sd) {
    const std::size_t plane = z.plane();
    mu.resize(static_cast<std::size_t>(z.n) * z.c);
    sd.resize(static_cast<std::size_t>(z.n) * z.c);
    parallel_for(static_cast<std::size_t>(z.n) * z.c, [&](std::size_t begin, std::size_t end) {
        for (std::size_t job = begin; job < end; ++job) {
            const int s = static_cast<int>(job / z.c);
            const int ch = static_cast<int>(job % z.c);
            double* p = z.channel(s, ch);
            const double mean = sum4(p, plane) / static_cast<double>(plane);
            double var = 0.0;
            for (std::size_t i = 0; i < plane; ++i) {
                const double d = p[i] - mean;
                var += d * d;
            }
            var /= static_cast<double>(plane);
            const double std_dev = std::sqrt(var);
            mu[job] = mean;
            sd[job] = std_dev;
            const double denom = std_dev + kNormEps;
            const double scale = layer.norm_scale[static_cast<std::size_t>(ch)] / denom;
            const double shift = layer.norm_shift[static_cast<std::size_t>(ch)];
            for (std::size_t i = 0; i < plane; ++i) p[i] = (p[i] - mean) * scale + shift;
        }
    });
}

void relu_inplace(FieldBatch& z) {
    parallel_for(static_cast<std::size_t>(z.n), [&](std::size_t sb, std::size_t se) {
        const std::size_t stride = static_cast<std::size_t>(z.c) * z.plane();
        for (std::size_t s = sb; s < se; ++s) {
            double* p = z.values.data() + s * stride;
            for (std::size_t i = 0; i < stride; ++i) p[i] = p[i] > 0.0 ? p[i] : 0.0;
        }
    });
}

struct ForwardCache {
    std::vector<FieldBatch> acts;       // acts[0] = lifted input, acts[l+1] = layer l output
    std::vector<FieldBatch> pre_norm;   // z = Wv + K(v) + b per layer
    std::vector<std::vector<double>> mu, sd;
    std::vector<PackedSpectra> vhat;    // retained input spectra per layer
};

FieldBatch run_forward(const FnoModel& model, const FieldBatch& batch, ForwardCache* cache) {
    const FnoConfig& cfg = model.config;
    batch.grid.validate();
    if (batch.c != cfg.c_in)
        throw ShapeError("forward: expected " + std::to_string(cfg.c_in) + " input channels, got " +
                         std::to_string(batch.c));
    check_grid_fits_modes(batch.grid, cfg.k_x, cfg.k_y);

    if (cache) {
        cache->acts.clear();
        cache->pre_norm.resize(static_cast<std::size_t>(cfg.n_layers));
        cache->mu.resize(static_cast<std::size_t>(cfg.n_layers));
        cache->sd.resize(static_cast<std::size_t>(cfg.n_layers));
        cache->vhat.resize(static_cast<std::size_t>(cfg.n_layers));
    }

    FieldBatch v(batch.n, cfg.d_v, batch.grid);
    channel_matmul(model.p_w, cfg.d_v, cfg.c_in, batch, v);
    add_bias(v, model.p_b);
    if (cache) cache->acts.push_back(v);

    FieldBatch spec(batch.n, cfg.d_v, batch.grid);
    for (int l = 0; l < cfg.n_layers; ++l) {
        const SpectralLayer& layer = model.layers[static_cast<std::size_t>(l)];
        const bool final_layer = (l == cfg.n_layers - 1);
        spectral_forward(layer, v, spec, cache ? &cache->vhat[static_cast<std::size_t>(l)] : nullptr);
        FieldBatch z(batch.n, cfg.d_v, batch.grid);
        channel_matmul(layer.w, cfg.d_v, cfg.d_v, v, z);
        const std::size_t total = z.values.size();
        parallel_for(total, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) z.values[i] += spec.values[i];
        });
        add_bias(z, layer.b);
        if (cache) cache->pre_norm[static_cast<std::size_t>(l)] = z;
        if (!final_layer) {
            if (cfg.use_norm) {
                std::vector<double> mu_local, sd_local;
                norm_forward(z, layer, cache ? cache->mu[static_cast<std::size_t>(l)] : mu_local,
                             cache ? cache->sd[static_cast<std::size_t>(l)] : sd_local);
            }
            relu_inplace(z);
        }
        v = std::move(z);
        if (cache) cache->acts.push_back(v);
    }

    FieldBatch out(batch.n, cfg.c_out, batch.grid);
    channel_matmul(model.q_w, cfg.c_out, cfg.d_v, v, out);
    add_bias(out, model.q_b);
    return out;
}

}  // namespace

void FnoConfig::validate() const {
    if (c_in < 1 || c_out < 1) throw ValueError("FnoConfig: channel counts must be >= 1");
    if (d_v < 1) throw ValueError("FnoConfig: d_v must be >= 1");
    if (n_layers < 1) throw ValueError("FnoConfig: n_layers must be >= 1");
    if (k_x < 1 || k_y < 1) throw ValueError("FnoConfig: mode counts must be >= 1");
}

std::int64_t FnoModel::parameter_count() const {
    std::int64_t total = 0;
    for (const ParamBinding& p : bind_parameters(const_cast<FnoModel&>(*this), nullptr)) {
        total += static_cast<std::int64_t>(p.size);
    }
    return total;
}

GradientStore GradientStore::zeros_like(const FnoModel& model) {
    GradientStore g;
    g.p_w.assign(model.p_w.size(), 0.0);
    g.p_b.assign(model.p_b.size(), 0.0);
    g.layers.resize(model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const SpectralLayer& layer = model.layers[l];
        g.layers[l].r_re.assign(layer.r_re.size(), 0.0);
        g.layers[l].r_im.assign(layer.r_im.size(), 0.0);
        g.layers[l].w.assign(layer.w.size(), 0.0);
        g.layers[l].b.assign(layer.b.size(), 0.0);
        g.layers[l].norm_scale.assign(layer.norm_scale.size(), 0.0);
        g.layers[l].norm_shift.assign(layer.norm_shift.size(), 0.0);
    }
    g.q_w.assign(model.q_w.size(), 0.0);
    g.q_b.assign(model.q_b.size(), 0.0);
    return g;
}

std::vector<ParamBinding> bind_parameters(FnoModel& model, GradientStore* grads) {
    std::vector<ParamBinding> out;
    const auto add = [&](const std::string& name, std::vector<double>& v,
                         std::vector<double>* g, bool decay) {
        if (v.empty()) return;
        out.push_back({name, v.data(), g ? g->data() : nullptr, v.size(), decay});
    };
    add("p.w", model.p_w, grads ? &grads->p_w : nullptr, true);
    add("p.b", model.p_b, grads ? &grads->p_b : nullptr, false);
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        SpectralLayer& layer = model.layers[l];
        GradientStore::LayerGrads* lg = grads ? &grads->layers[l] : nullptr;
        const std::string prefix = "layer" + std::to_string(l) + ".";
        add(prefix + "r.re", layer.r_re, lg ? &lg->r_re : nullptr, true);
        add(prefix + "r.im", layer.r_im, lg ? &lg->r_im : nullptr, true);
        add(prefix + "w", layer.w, lg ? &lg->w : nullptr, true);
        add(prefix + "b", layer.b, lg ? &lg->b : nullptr, false);
        add(prefix + "norm.scale", layer.norm_scale, lg ? &lg->norm_scale : nullptr, false);
        add(prefix + "norm.shift", layer.norm_shift, lg ? &lg->norm_shift : nullptr, false);
    }
    add("q.w", model.q_w, grads ? &grads->q_w : nullptr, true);
    add("q.b", model.q_b, grads ? &grads->q_b : nullptr, false);
    return out;
}

FnoModel init_model(const FnoConfig& config, std::uint64_t seed) {
    config.validate();
    FnoModel model;
    model.config = config;
    Rng rng(seed);
    const auto fill_uniform = [&](std::vector<double>& v, std::size_t count, double s) {
        v.resize(count);
        for (double& x : v) x = rng.uniform(-s, s);
    };
    const double s_in = std::sqrt(1.0 / config.c_in);
    const double s_dv = std::sqrt(1.0 / config.d_v);
    fill_uniform(model.p_w, static_cast<std::size_t>(config.d_v) * config.c_in, s_in);
    fill_uniform(model.p_b, static_cast<std::size_t>(config.d_v), s_in);
    model.layers.resize(static_cast<std::size_t>(config.n_layers));
    const double s_r = 1.0 / config.d_v;
    for (SpectralLayer& layer : model.layers) {
        layer.d_v = config.d_v;
        layer.k_x = config.k_x;
        layer.k_y = config.k_y;
        const std::size_t r_size = layer.modes() * config.d_v * config.d_v;
        layer.r_re.resize(r_size);
        layer.r_im.resize(r_size);
        for (std::size_t i = 0; i < r_size; ++i) {
            layer.r_re[i] = rng.uniform(-s_r, s_r);
            layer.r_im[i] = rng.uniform(-s_r, s_r);
        }
        fill_uniform(layer.w, static_cast<std::size_t>(config.d_v) * config.d_v, s_dv);
        fill_uniform(layer.b, static_cast<std::size_t>(config.d_v), s_dv);
        if (config.use_norm) {
            layer.norm_scale.assign(static_cast<std::size_t>(config.d_v), 1.0);
            layer.norm_shift.assign(static_cast<std::size_t>(config.d_v), 0.0);
        }
    }
    fill_uniform(model.q_w, static_cast<std::size_t>(config.c_out) * config.d_v, s_dv);
    fill_uniform(model.q_b, static_cast<std::size_t>(config.c_out), s_dv);
    return model;
}

FieldBatch lift(const FnoModel& model, const FieldBatch& batch) {
    if (batch.c != model.config.c_in)
        throw ShapeError("lift: expected " + std::to_string(model.config.c_in) +
                         " channels, got " + std::to_string(batch.c));
    FieldBatch v(batch.n, model.config.d_v, batch.grid);
    channel_matmul(model.p_w, model.config.d_v, model.config.c_in, batch, v);
    add_bias(v, model.p_b);
    return v;
}

FieldBatch spectral_conv(const SpectralLayer& layer, const FieldBatch& v) {
    if (v.c != layer.d_v)
        throw ShapeError("spectral_conv: expected " + std::to_string(layer.d_v) +
                         " channels, got " + std::to_string(v.c));
    FieldBatch out(v.n, layer.d_v, v.grid);
    spectral_forward(layer, v, out, nullptr);
    return out;
}

FieldBatch layer_forward(const SpectralLayer& layer, const FieldBatch& v, bool use_norm,
                         bool is_final) {
    if (v.c != layer.d_v)
        throw ShapeError("layer_forward: expected " + std::to_string(layer.d_v) +
                         " channels, got " + std::to_string(v.c));
    FieldBatch z(v.n, layer.d_v, v.grid);
    channel_matmul(layer.w, layer.d_v, layer.d_v, v, z);
    FieldBatch spec(v.n, layer.d_v, v.grid);
    spectral_forward(layer, v, spec, nullptr);
    for (std::size_t i = 0; i < z.values.size(); ++i) z.values[i] += spec.values[i];
    add_bias(z, layer.b);
    if (!is_final) {
        if (use_norm) {
            if (layer.norm_scale.empty())
                throw ShapeError("layer_forward: normalization requested but layer has no affine");
            std::vector<double> mu, sd;
            norm_forward(z, layer, mu, sd);
        }
        relu_inplace(z);
    }
    return z;
}

FieldBatch forward(const FnoModel& model, const FieldBatch& batch) {
    return run_forward(model, batch, nullptr);
}

double loss_value(const FnoModel& model, const FieldBatch& batch, const FieldBatch& targets) {
    const FieldBatch pred = run_forward(model, batch, nullptr);
    if (pred.values.size() != targets.values.size() || pred.n != targets.n)
        throw ShapeError("loss: prediction/target shape mismatch");
    const std::size_t block = static_cast<std::size_t>(pred.c) * pred.plane();
    double total = 0.0;
    for (int s = 0; s < pred.n; ++s) {
        const double* p = pred.values.data() + static_cast<std::size_t>(s) * block;
        const double* t = targets.values.data() + static_cast<std::size_t>(s) * block;
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < block; ++i) {
            const double d = p[i] - t[i];
            num += d * d;
            den += t[i] * t[i];
        }
        if (den == 0.0)
            throw ValueError("loss: target " + std::to_string(s) + " has zero norm (degenerate)");
        total += num / den;
    }
    return total / pred.n;
}

std::pair<double, GradientStore> loss_and_grad(const FnoModel& model, const FieldBatch& batch,
                                               const FieldBatch& targets) {
    const FnoConfig& cfg = model.config;
    ForwardCache cache;
    FieldBatch pred = run_forward(model, batch, &cache);
    if (pred.values.size() != targets.values.size() || pred.n != targets.n)
        throw ShapeError("loss_and_grad: prediction/target shape mismatch");

    GradientStore grads = GradientStore::zeros_like(model);

    // Relative squared L2 loss and its gradient w.r.t. the prediction.
    const std::size_t block = static_cast<std::size_t>(pred.c) * pred.plane();
    FieldBatch g_pred(pred.n, pred.c, pred.grid);
    double total = 0.0;
    for (int s = 0; s < pred.n; ++s) {
        const double* p = pred.values.data() + static_cast<std::size_t>(s) * block;
        const double* t = targets.values.data() + static_cast<std::size_t>(s) * block;
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < block; ++i) {
            const double d = p[i] - t[i];
            num += d * d;
            den += t[i] * t[i];
        }
        if (den == 0.0)
            throw ValueError("loss_and_grad: target " + std::to_string(s) +
                             " has zero norm (degenerate)");
        total += num / den;
        double* g = g_pred.values.data() + static_cast<std::size_t>(s) * block;
        const double coeff = 2.0 / (den * pred.n);
        for (std::size_t i = 0; i < block; ++i) g[i] = coeff * (p[i] - t[i]);
    }
    const double loss = total / pred.n;

    // Projection backward.
    const FieldBatch& v_last = cache.acts.back();
    matmul_weight_grad(g_pred, cfg.c_out, v_last, cfg.d_v, grads.q_w);
    for (int o = 0; o < cfg.c_out; ++o) {
        double acc = 0.0;
        for (int s = 0; s < g_pred.n; ++s) acc += sum4(g_pred.channel(s, o), g_pred.plane());
        grads.q_b[static_cast<std::size_t>(o)] += acc;
    }
    FieldBatch g_cur(batch.n, cfg.d_v, batch.grid);
    channel_matmul_transposed_add(model.q_w, cfg.c_out, cfg.d_v, g_pred, g_cur);

    const SpectralPlans plans = plans_for(batch.grid);
    const int height = batch.grid.height;
    const int width = batch.grid.width;
    const std::size_t plane = batch.plane();
    const double inv_hw = 1.0 / (static_cast<double>(height) * width);
    const bool even_w = (width % 2) == 0;

    for (int l = cfg.n_layers - 1; l >= 0; --l) {
        const SpectralLayer& layer = model.layers[static_cast<std::size_t>(l)];
        GradientStore::LayerGrads& lg = grads.layers[static_cast<std::size_t>(l)];
        const bool final_layer = (l == cfg.n_layers - 1);
        const FieldBatch& v_in = cache.acts[static_cast<std::size_t>(l)];
        FieldBatch& z = cache.pre_norm[static_cast<std::size_t>(l)];

        if (!final_layer) {
            // ReLU mask: the cached layer output is relu(y), positive iff y > 0.
            const FieldBatch& activated = cache.acts[static_cast<std::size_t>(l) + 1];
            parallel_for(g_cur.values.size(), [&](std::size_t b, std::size_t e) {
                for (std::size_t i = b; i < e; ++i) {
                    if (!(activated.values[i] > 0.0)) g_cur.values[i] = 0.0;
                }
            });
            if (cfg.use_norm) {
                // Backward through y = (z - mu)/(sd + eps) * scale + shift.
                const std::vector<double>& mu = cache.mu[static_cast<std::size_t>(l)];
                const std::vector<double>& sd = cache.sd[static_cast<std::size_t>(l)];
                std::vector<double> scale_part(static_cast<std::size_t>(batch.n) * cfg.d_v, 0.0);
                std::vector<double> shift_part(static_cast<std::size_t>(batch.n) * cfg.d_v, 0.0);
                parallel_for(static_cast<std::size_t>(batch.n) * cfg.d_v,
                             [&](std::size_t jb, std::size_t je) {
                    for (std::size_t job = jb; job < je; ++job) {
                        const int s = static_cast<int>(job / cfg.d_v);
                        const int ch = static_cast<int>(job % cfg.d_v);
                        double* g = g_cur.channel(s, ch);
                        const double* zp = z.channel(s, ch);
                        const double mean = mu[job];
                        const double std_dev = sd[job];
                        const double denom = std_dev + kNormEps;
                        const double scale = layer.norm_scale[static_cast<std::size_t>(ch)];
                        double sum_g = 0.0, sum_gn = 0.0, sum_gz = 0.0;
                        for (std::size_t i = 0; i < plane; ++i) {
                            const double zc = zp[i] - mean;
                            sum_g += g[i];
                            sum_gn += g[i] * (zc / denom);
                            sum_gz += g[i] * zc;
                        }
                        shift_part[job] = sum_g;
                        scale_part[job] = sum_gn;
                        const double mean_gn = scale * sum_g / static_cast<double>(plane);
                        const double curv = std_dev > 0.0
                                                ? scale * sum_gz /
                                                      (static_cast<double>(plane) * std_dev * denom * denom)
                                                : 0.0;
                        for (std::size_t i = 0; i < plane; ++i) {
                            const double zc = zp[i] - mean;
                            g[i] = (scale * g[i] - mean_gn) / denom - zc * curv;
                        }
                    }
                });
                parallel_for(static_cast<std::size_t>(cfg.d_v), [&](std::size_t cb, std::size_t ce) {
                    for (std::size_t ch = cb; ch < ce; ++ch) {
                        double acc_scale = 0.0, acc_shift = 0.0;
                        for (int s = 0; s < batch.n; ++s) {
                            acc_scale += scale_part[static_cast<std::size_t>(s) * cfg.d_v + ch];
                            acc_shift += shift_part[static_cast<std::size_t>(s) * cfg.d_v + ch];
                        }
                        lg.norm_scale[ch] += acc_scale;
                        lg.norm_shift[ch] += acc_shift;
                    }
                });
            }
        }

        // g_cur now holds dL/dz. Bias and local-map gradients.
        parallel_for(static_cast<std::size_t>(cfg.d_v), [&](std::size_t hb, std::size_t he) {
            for (std::size_t h = hb; h < he; ++h) {
                double acc = 0.0;
                for (int s = 0; s < batch.n; ++s) acc += sum4(g_cur.channel(s, static_cast<int>(h)), plane);
                lg.b[h] += acc;
            }
        });
        matmul_weight_grad(g_cur, cfg.d_v, v_in, cfg.d_v, lg.w);

        // Spectral path: Ghat = retained modes of F(g_z).
        PackedSpectra ghat;
        ghat.resize(batch.n, layer.modes(), cfg.d_v);
        parallel_for(static_cast<std::size_t>(batch.n) * cfg.d_v, [&](std::size_t jb, std::size_t je) {
            FftWorkspace ws;
            std::vector<cd> rowspec;
            for (std::size_t job = jb; job < je; ++job) {
                const int s = static_cast<int>(job / cfg.d_v);
                const int ch = static_cast<int>(job % cfg.d_v);
                gather_retained(g_cur.channel(s, ch), height, width, layer.k_x, layer.k_y, *plans.w,
                                *plans.h, ws, rowspec, ghat.re.data() + ghat.at(s, 0, ch),
                                ghat.im.data() + ghat.at(s, 0, ch), cfg.d_v);
            }
        });

        // Kernel gradient: g_R[k][h][j] += (w_q/(HW)) * Ghat[s][k][h] * conj(vhat[s][k][j]).
        const PackedSpectra& vhat = cache.vhat[static_cast<std::size_t>(l)];
        const std::size_t modes = layer.modes();
        parallel_for(modes, [&](std::size_t kb, std::size_t ke) {
            for (std::size_t k = kb; k < ke; ++k) {
                const int q = static_cast<int>(k % layer.k_y);
                const double weight = (q == 0 || (even_w && q == width / 2)) ? 1.0 : 2.0;
                const double factor = weight * inv_hw;
                double* grre = lg.r_re.data() + k * cfg.d_v * cfg.d_v;
                double* grim = lg.r_im.data() + k * cfg.d_v * cfg.d_v;
                for (int s = 0; s < batch.n; ++s) {
                    const double* gre = ghat.re.data() + ghat.at(s, k, 0);
                    const double* gim = ghat.im.data() + ghat.at(s, k, 0);
                    const double* vre = vhat.re.data() + vhat.at(s, k, 0);
                    const double* vim = vhat.im.data() + vhat.at(s, k, 0);
                    for (int h = 0; h < cfg.d_v; ++h) {
                        const double cre = factor * gre[h];
                        const double cim = factor * gim[h];
                        double* gr = grre + static_cast<std::size_t>(h) * cfg.d_v;
                        double* gi = grim + static_cast<std::size_t>(h) * cfg.d_v;
                        // c * conj(v) accumulated over samples.
                        for (int j = 0; j < cfg.d_v; ++j) {
                            gr[j] += cre * vre[j] + cim * vim[j];
                            gi[j] += cim * vre[j] - cre * vim[j];
                        }
                    }
                }
            }
        });

        // Input gradient: Wt * g_z plus the spectral adjoint (the forward op
        // with R replaced by its conjugate transpose; the Hermitian weights
        // cancel between the two transform adjoints).
        FieldBatch g_prev(batch.n, cfg.d_v, batch.grid);
        channel_matmul_transposed_add(layer.w, cfg.d_v, cfg.d_v, g_cur, g_prev);
        PackedSpectra hhat;
        mode_multiply_adjoint(layer, ghat, hhat, batch.n);
        parallel_for(static_cast<std::size_t>(batch.n) * cfg.d_v, [&](std::size_t jb, std::size_t je) {
            FftWorkspace ws;
            std::vector<cd> inter;
            std::vector<double> plane_buf(plane);
            for (std::size_t job = jb; job < je; ++job) {
                const int s = static_cast<int>(job / cfg.d_v);
                const int ch = static_cast<int>(job % cfg.d_v);
                scatter_inverse(hhat.re.data() + hhat.at(s, 0, ch), hhat.im.data() + hhat.at(s, 0, ch),
                                cfg.d_v, height, width, layer.k_x, layer.k_y, *plans.w, *plans.h,
                                ws, inter, plane_buf.data());
                double* dst = g_prev.channel(s, ch);
                for (std::size_t i = 0; i < plane; ++i) dst[i] += plane_buf[i];
            }
        });
        g_cur = std::move(g_prev);
    }

    // Lifting backward.
    matmul_weight_grad(g_cur, cfg.d_v, batch, cfg.c_in, grads.p_w);
    for (int h = 0; h < cfg.d_v; ++h) {
        double acc = 0.0;
        for (int s = 0; s < batch.n; ++s) acc += sum4(g_cur.channel(s, h), plane);
        grads.p_b[static_cast<std::size_t>(h)] += acc;
    }

    return {loss, std::move(grads)};
}

AdamWState AdamWState::zeros_like(const FnoModel& model) {
    AdamWState state;
    auto bindings = bind_parameters(const_cast<FnoModel&>(model), nullptr);
    state.m.resize(bindings.size());
    state.v.resize(bindings.size());
    for (std::size_t i = 0; i < bindings.size(); ++i) {
        state.m[i].assign(bindings[i].size, 0.0);
        state.v[i].assign(bindings[i].size, 0.0);
    }
    return state;
}

// .fnck layout, little-endian:
//   "FNCK" | u32 version=1 | u32 c_in | u32 c_out | u32 d_v | u32 k_x | u32 k_y
//   | u32 n_layers | u8 use_norm | parameter tensors in declaration order
//   (P.w, P.b, per layer: R interleaved (re,im), W, b, norm scale/shift, then
//   Q.w, Q.b) | u8 has_state | [u64 step | m tensors | v tensors]
void save_model(const FnoModel& model, const std::string& path, const AdamWState* state) {
    io::BinaryWriter w(path);
    w.bytes("FNCK", 4);
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(model.config.c_in));
    w.u32(static_cast<std::uint32_t>(model.config.c_out));
    w.u32(static_cast<std::uint32_t>(model.config.d_v));
    w.u32(static_cast<std::uint32_t>(model.config.k_x));
    w.u32(static_cast<std::uint32_t>(model.config.k_y));
    w.u32(static_cast<std::uint32_t>(model.config.n_layers));
    w.u8(model.config.use_norm ? 1 : 0);

    const auto write_complex = [&](const std::vector<double>& re, const std::vector<double>& im) {
        std::vector<double> interleaved(re.size() * 2);
        for (std::size_t i = 0; i < re.size(); ++i) {
            interleaved[2 * i] = re[i];
            interleaved[2 * i + 1] = im[i];
        }
        w.f64_array(interleaved.data(), interleaved.size());
    };
    w.f64_array(model.p_w.data(), model.p_w.size());
    w.f64_array(model.p_b.data(), model.p_b.size());
    for (const SpectralLayer& layer : model.layers) {
        write_complex(layer.r_re, layer.r_im);
        w.f64_array(layer.w.data(), layer.w.size());
        w.f64_array(layer.b.data(), layer.b.size());
        if (model.config.use_norm) {
            w.f64_array(layer.norm_scale.data(), layer.norm_scale.size());
            w.f64_array(layer.norm_shift.data(), layer.norm_shift.size());
        }
    }
    w.f64_array(model.q_w.data(), model.q_w.size());
    w.f64_array(model.q_b.data(), model.q_b.size());

    if (state) {
        auto bindings = bind_parameters(const_cast<FnoModel&>(model), nullptr);
        if (state->m.size() != bindings.size() || state->v.size() != bindings.size())
            throw ValueError("save_model: optimizer state does not match the model");
        w.u8(1);
        w.u64(static_cast<std::uint64_t>(state->step));
        for (std::size_t i = 0; i < bindings.size(); ++i)
            w.f64_array(state->m[i].data(), state->m[i].size());
        for (std::size_t i = 0; i < bindings.size(); ++i)
            w.f64_array(state->v[i].data(), state->v[i].size());
    } else {
        w.u8(0);
    }
    w.commit();
}

FnoModel load_model(const std::string& path, AdamWState* state_out) {
    io::BinaryReader r(path);
    if (r.fixed_bytes(4) != "FNCK") throw FormatError("bad magic, expected FNCK", 0);
    const std::uint32_t version = r.u32();
    if (version != 1)
        throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
    FnoConfig cfg;
    cfg.c_in = static_cast<int>(r.u32());
    cfg.c_out = static_cast<int>(r.u32());
    cfg.d_v = static_cast<int>(r.u32());
    cfg.k_x = static_cast<int>(r.u32());
    cfg.k_y = static_cast<int>(r.u32());
    cfg.n_layers = static_cast<int>(r.u32());
    cfg.use_norm = r.u8() != 0;
    constexpr int kDimCap = 1 << 16;
    if (cfg.c_in < 1 || cfg.c_out < 1 || cfg.d_v < 1 || cfg.k_x < 1 || cfg.k_y < 1 ||
        cfg.n_layers < 1 || cfg.c_in > kDimCap || cfg.c_out > kDimCap || cfg.d_v > kDimCap ||
        cfg.k_x > kDimCap || cfg.k_y > kDimCap || cfg.n_layers > kDimCap)
        throw FormatError("implausible checkpoint configuration", 8);

    // Exact size audit before any allocation.
    unsigned __int128 params = 0;
    const unsigned __int128 dv = cfg.d_v;
    params += dv * cfg.c_in + dv;                       // lifting
    unsigned __int128 per_layer = 2 * static_cast<unsigned __int128>(2 * cfg.k_x) * cfg.k_y * dv * dv;
    per_layer += dv * dv + dv;
    if (cfg.use_norm) per_layer += 2 * dv;
    params += per_layer * cfg.n_layers;
    params += static_cast<unsigned __int128>(cfg.c_out) * dv + cfg.c_out;
    const unsigned __int128 body = 33 + params * 8 + 1;
    if (body > r.size())
        throw FormatError("checkpoint smaller than its configuration implies", 8);

    FnoModel model;
    model.config = cfg;
    const auto read_array = [&](std::vector<double>& v, std::size_t count) {
        v.resize(count);
        r.f64_array(v.data(), count);
        for (double x : v)
            if (!std::isfinite(x)) throw FormatError("non-finite parameter value", r.offset());
    };
    const auto read_complex = [&](std::vector<double>& re, std::vector<double>& im,
                                  std::size_t count) {
        std::vector<double> interleaved;
        read_array(interleaved, count * 2);
        re.resize(count);
        im.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            re[i] = interleaved[2 * i];
            im[i] = interleaved[2 * i + 1];
        }
    };
    read_array(model.p_w, static_cast<std::size_t>(cfg.d_v) * cfg.c_in);
    read_array(model.p_b, static_cast<std::size_t>(cfg.d_v));
    model.layers.resize(static_cast<std::size_t>(cfg.n_layers));
    for (SpectralLayer& layer : model.layers) {
        layer.d_v = cfg.d_v;
        layer.k_x = cfg.k_x;
        layer.k_y = cfg.k_y;
        read_complex(layer.r_re, layer.r_im, layer.modes() * cfg.d_v * cfg.d_v);
        read_array(layer.w, static_cast<std::size_t>(cfg.d_v) * cfg.d_v);
        read_array(layer.b, static_cast<std::size_t>(cfg.d_v));
        if (cfg.use_norm) {
            read_array(layer.norm_scale, static_cast<std::size_t>(cfg.d_v));
            read_array(layer.norm_shift, static_cast<std::size_t>(cfg.d_v));
        }
    }
    read_array(model.q_w, static_cast<std::size_t>(cfg.c_out) * cfg.d_v);
    read_array(model.q_b, static_cast<std::size_t>(cfg.c_out));

    const std::uint8_t has_state = r.u8();
    if (has_state > 1) throw FormatError("invalid optimizer-state flag", r.offset() - 1);
    if (has_state == 1) {
        AdamWState state;
        state.step = static_cast<std::int64_t>(r.u64());
        if (state.step < 0) throw FormatError("negative optimizer step", r.offset() - 8);
        auto bindings = bind_parameters(model, nullptr);
        state.m.resize(bindings.size());
        state.v.resize(bindings.size());
        for (std::size_t i = 0; i < bindings.size(); ++i) read_array(state.m[i], bindings[i].size);
        for (std::size_t i = 0; i < bindings.size(); ++i) read_array(state.v[i], bindings[i].size);
        for (const auto& t : state.v)
            for (double x : t)
                if (x < 0.0) throw FormatError("negative second-moment entry", r.offset());
        if (state_out) *state_out = std::move(state);
    } else if (state_out) {
        *state_out = AdamWState{};
    }
    r.expect_exhausted("checkpoint");
    return model;
}

std::uint64_t parameter_hash(const FnoModel& model) {
    std::uint64_t hash = 1469598103934665603ull;  // FNV-1a
    for (const ParamBinding& p : bind_parameters(const_cast<FnoModel&>(model), nullptr)) {
        const unsigned char* bytes = reinterpret_cast<const unsigned char*>(p.value);
        for (std::size_t i = 0; i < p.size * sizeof(double); ++i) {
            hash ^= bytes[i];
            hash *= 1099511628211ull;
        }
    }
    return hash;
}

}  // namespace fno
