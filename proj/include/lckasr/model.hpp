#pragma once

#include <functional>
#include <string>

#include "lckasr/config.hpp"
#include "lckasr/param_store.hpp"
#include "lckasr/tensor.hpp"

namespace lckasr {

// Allocate and initialize every parameter tensor. Deterministic for a fixed
// seed: each tensor is drawn from an RNG keyed by (seed, parameter name) with
// a fan-in scaled uniform bound sqrt(6 / fan_in).
ParamStore build_model(const ModelConfig& cfg);

// Inference on an NCHW batch of RGB images in [0, 1].
Tensor forward(const ParamStore& params, const ModelConfig& cfg, const Tensor& lr_image);

// Mean of the 8 dihedral-transformed forwards, each mapped back.
Tensor forward_ensemble(const ParamStore& params, const ModelConfig& cfg, const Tensor& lr_image);

// Same averaging applied to an arbitrary x->y map (used by tests with stubs).
Tensor ensemble_over(const std::function<Tensor(const Tensor&)>& fn, const Tensor& lr_image);

void save_model(const ParamStore& params, const std::string& path);

// Load and verify the file fingerprint against the config.
ParamStore load_model(const std::string& path, const ModelConfig& cfg);

}  // namespace lckasr
