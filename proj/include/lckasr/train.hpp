#pragma once

#include <string>
#include <vector>

#include "lckasr/config.hpp"
#include "lckasr/optim.hpp"
#include "lckasr/param_store.hpp"
#include "lckasr/tensor.hpp"

namespace lckasr {

// One LR/HR pair, each (1, 3, h, w) with values in [0, 1].
struct SamplePair {
    Tensor lr;
    Tensor hr;
};

struct Dataset {
    std::vector<SamplePair> items;
};

struct TrainSchedule {
    int iters = 0;
    int batch = 64;
    int patch = 48;  // LR patch size
    double lr = 5e-3;
    double ema_decay = 0.999;
    double weight_decay = 0.0;
    double eps = 1e-8;
    bool augment = false;  // random flip / quarter turns, off by default
};

struct TrainResult {
    ParamStore params;  // EMA-applied weights
    std::vector<double> losses;
    std::vector<double> seconds;  // wall-clock per logged iteration
};

TrainResult train(const ModelConfig& cfg, const Dataset& data, const TrainSchedule& schedule);

// CSV columns: iteration,loss,learning_rate,seconds_elapsed
std::string loss_trace_csv(const TrainResult& result, double learning_rate);

}  // namespace lckasr
