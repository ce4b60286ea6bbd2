#pragma once

#include <vector>

#include "lckasr/param_store.hpp"

namespace lckasr {

struct AdanConfig {
    double lr = 5e-3;
    double beta1 = 0.98;
    double beta2 = 0.92;
    double beta3 = 0.99;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

// Adaptive Nesterov momentum state: first moment, gradient-difference moment,
// second moment of the extrapolated gradient, plus the previous gradient.
// Slots are aligned with the parameter store entry order.
struct AdanState {
    AdanConfig hyper;
    long step = 0;
    std::vector<Tensor> m, v, n, prev_grad;
};

AdanState adan_init(const ParamStore& params, const AdanConfig& hyper);

// One update. Gradients must be in store entry order with matching shapes.
void adan_step(ParamStore& params, const std::vector<Tensor>& grads, AdanState& state);

// Exponential moving average of the parameters, used as inference weights.
// The shadow starts at zero and ema_apply divides by (1 - decay^steps), so
// the average covers only parameters actually seen; without that correction
// the initial weights would still carry decay^T of the average at desk-scale
// step counts.
struct EmaState {
    double decay = 0.999;
    long steps = 0;
    std::vector<Tensor> shadow;
};

EmaState ema_init(const ParamStore& params, double decay);
void ema_update(EmaState& ema, const ParamStore& params);
ParamStore ema_apply(const EmaState& ema, const ParamStore& params);

}  // namespace lckasr
