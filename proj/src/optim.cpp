#include "fno/optim.hpp"

#include <cmath>

#include "fno/parallel.hpp"

namespace fno {

void OptimConfig::validate() const {
    if (!(lr > 0.0)) throw ValueError("OptimConfig: lr must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw ValueError("OptimConfig: betas must lie in [0, 1)");
    if (!(eps > 0.0)) throw ValueError("OptimConfig: eps must be positive");
    if (!(weight_decay >= 0.0)) throw ValueError("OptimConfig: weight_decay must be >= 0");
}

void adamw_step(FnoModel& model, GradientStore& grads, AdamWState& state,
                const OptimConfig& config) {
    config.validate();
    auto bindings = bind_parameters(model, &grads);
    if (state.m.size() != bindings.size() || state.v.size() != bindings.size())
        throw ValueError("adamw_step: state does not match the parameter list");
    for (std::size_t i = 0; i < bindings.size(); ++i) {
        if (state.m[i].size() != bindings[i].size || state.v[i].size() != bindings[i].size)
            throw ValueError("adamw_step: state shape mismatch on " + bindings[i].name);
        const double* g = bindings[i].grad;
        for (std::size_t p = 0; p < bindings[i].size; ++p) {
            if (!std::isfinite(g[p]))
                throw OptimError("non-finite gradient in tensor " + bindings[i].name);
        }
    }

    state.step += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));

    for (std::size_t i = 0; i < bindings.size(); ++i) {
        ParamBinding& bind = bindings[i];
        double* m = state.m[i].data();
        double* v = state.v[i].data();
        double* theta = bind.value;
        const double* g = bind.grad;
        const double wd = bind.decay ? config.weight_decay : 0.0;
        parallel_for(bind.size, [&](std::size_t begin, std::size_t end) {
            for (std::size_t p = begin; p < end; ++p) {
                m[p] = config.beta1 * m[p] + (1.0 - config.beta1) * g[p];
                v[p] = config.beta2 * v[p] + (1.0 - config.beta2) * g[p] * g[p];
                const double mhat = m[p] / bc1;
                const double vhat = v[p] / bc2;
                theta[p] -= config.lr * (mhat / (std::sqrt(vhat) + config.eps) + wd * theta[p]);
            }
        });
    }
}

}  // namespace fno
