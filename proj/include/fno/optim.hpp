#pragma once

#include "fno/model.hpp"

namespace fno {

struct OptimConfig {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;

    void validate() const;
};

/// One AdamW update over every parameter tensor:
///   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2
///   theta <- theta - lr*(mhat/(sqrt(vhat)+eps) + wd*theta)
/// with bias-corrected moments and the decay applied decoupled; biases and
/// normalization affines are exempt from decay. Throws OptimError naming
/// the tensor on a non-finite gradient.
void adamw_step(FnoModel& model, GradientStore& grads, AdamWState& state,
                const OptimConfig& config);

}  // namespace fno
