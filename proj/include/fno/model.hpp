#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fno/field.hpp"

namespace fno {

struct FnoConfig {
    int c_in = 2;
    int c_out = 1;
    int d_v = 96;
    int k_x = 20;
    int k_y = 20;
    int n_layers = 5;
    bool use_norm = true;
    // activation is fixed: ReLU on every non-final layer

    void validate() const;
    bool operator==(const FnoConfig&) const = default;
};

/// One Fourier layer. The spectral kernel R acts on the retained corner
/// modes of the half spectrum: rows {0..k_x-1} and {H-k_x..H-1}, columns
/// {0..k_y-1}, in that enumeration order. Real and imaginary parts are
/// stored as separate arrays of shape [2*k_x][k_y][d_v][d_v] and optimized
/// as independent real parameters.
struct SpectralLayer {
    int d_v = 0;
    int k_x = 0;
    int k_y = 0;
    std::vector<double> r_re, r_im;              // [2*k_x][k_y][d_v][d_v]
    std::vector<double> w;                       // [d_v][d_v]
    std::vector<double> b;                       // [d_v]
    std::vector<double> norm_scale, norm_shift;  // [d_v], empty when norm off

    std::size_t modes() const { return static_cast<std::size_t>(2 * k_x) * k_y; }
};

struct FnoModel {
    FnoConfig config;
    std::vector<double> p_w, p_b;  // lifting [d_v][c_in], [d_v]
    std::vector<SpectralLayer> layers;
    std::vector<double> q_w, q_b;  // projection [c_out][d_v], [c_out]

    std::int64_t parameter_count() const;
};

/// Gradient arrays mirroring the model's parameter tensors exactly.
struct GradientStore {
    struct LayerGrads {
        std::vector<double> r_re, r_im, w, b, norm_scale, norm_shift;
    };
    std::vector<double> p_w, p_b;
    std::vector<LayerGrads> layers;
    std::vector<double> q_w, q_b;

    static GradientStore zeros_like(const FnoModel& model);
};

/// Named view over one parameter tensor and (optionally) its gradient;
/// enumeration order is the declaration order used by the checkpoint
/// format and the optimizer state.
struct ParamBinding {
    std::string name;
    double* value = nullptr;
    double* grad = nullptr;
    std::size_t size = 0;
    bool decay = true;  // false for biases and normalization affines
};
std::vector<ParamBinding> bind_parameters(FnoModel& model, GradientStore* grads = nullptr);

/// Deterministic initialization: P/W/Q/b uniform(-s, s) with s = sqrt(1/fan_in),
/// R re/im uniform(-1/d_v, 1/d_v), norm scale 1 and shift 0.
FnoModel init_model(const FnoConfig& config, std::uint64_t seed);

/// Pointwise affine lift into the d_v-channel latent space.
FieldBatch lift(const FnoModel& model, const FieldBatch& batch);

/// fft -> per-retained-mode complex d_v x d_v multiply -> zero elsewhere -> ifft.
FieldBatch spectral_conv(const SpectralLayer& layer, const FieldBatch& v);

/// W v + spectral(v) + b, then (non-final layers) channel normalization over
/// space when enabled and ReLU. The final layer of a stack is linear.
FieldBatch layer_forward(const SpectralLayer& layer, const FieldBatch& v, bool use_norm,
                         bool is_final);

/// Full forward pass: lift, n_layers Fourier layers, projection.
FieldBatch forward(const FnoModel& model, const FieldBatch& batch);

/// Mean over the batch of the relative squared L2 error |pred-target|^2 /
/// |target|^2, with exact reverse-mode gradients for every parameter.
std::pair<double, GradientStore> loss_and_grad(const FnoModel& model, const FieldBatch& batch,
                                               const FieldBatch& targets);

/// Loss only (no gradient work); same definition as loss_and_grad.
double loss_value(const FnoModel& model, const FieldBatch& batch, const FieldBatch& targets);

/// Optimizer moments as stored alongside a checkpoint; kept here so the
/// checkpoint format is self-contained (see optim.hpp for the update rule).
struct AdamWState {
    std::int64_t step = 0;
    std::vector<std::vector<double>> m;  // one array per parameter tensor
    std::vector<std::vector<double>> v;

    static AdamWState zeros_like(const FnoModel& model);
};

/// .fnck checkpoint round trip; optional AdamW state block appended.
void save_model(const FnoModel& model, const std::string& path,
                const AdamWState* state = nullptr);
FnoModel load_model(const std::string& path, AdamWState* state_out = nullptr);

/// FNV-1a hash over all parameter bytes, for reproducibility checks.
std::uint64_t parameter_hash(const FnoModel& model);

}  // namespace fno
