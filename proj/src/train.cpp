#include "lckasr/train.hpp"

#include <chrono>
#include <cmath>
#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "lckasr/graph.hpp"
#include "lckasr/model.hpp"

namespace lckasr {

namespace {

// The tape allocates and frees a few hundred MB per iteration; keep that
// memory in the arena instead of returning it to the kernel every step.
void keep_arena_warm() {
#if defined(__GLIBC__)
    static const bool done = [] {
        mallopt(M_MMAP_MAX, 0);
        mallopt(M_TRIM_THRESHOLD, -1);
        return true;
    }();
    (void)done;
#endif
}

// Copy an aligned LR/HR patch pair into one batch slot.
void copy_patch(Tensor& dst, int slot, const Tensor& src, int y0, int x0, int size) {
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < size; ++y) {
            const float* s = src.data() + src.offset(0, c, y0 + y, x0);
            float* d = dst.data() + dst.offset(slot, c, y, 0);
            std::copy_n(s, size, d);
        }
}

}  // namespace

TrainResult train(const ModelConfig& cfg, const Dataset& data, const TrainSchedule& schedule) {
    keep_arena_warm();
    cfg.validate();
    if (schedule.batch < 1) throw ConfigError("train: batch size must be positive");
    if (schedule.patch < 1) throw ConfigError("train: patch size must be positive");
    if (data.items.empty()) throw DataError("train: dataset is empty");

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < data.items.size(); ++i) {
        const auto& it = data.items[i];
        if (it.lr.c() != 3 || it.hr.c() != 3)
            throw DataError("train: dataset images must be RGB");
        if (it.hr.h() != it.lr.h() * cfg.scale || it.hr.w() != it.lr.w() * cfg.scale)
            throw DataError("train: HR size is not scale x LR size for item " +
                            std::to_string(i));
        if (it.lr.h() >= schedule.patch && it.lr.w() >= schedule.patch) eligible.push_back(i);
    }
    if (eligible.empty())
        throw DataError("train: patch " + std::to_string(schedule.patch) +
                        " is larger than every image");

    ParamStore params = build_model(cfg);
    AdanConfig adan_cfg;
    adan_cfg.lr = schedule.lr;
    adan_cfg.weight_decay = schedule.weight_decay;
    adan_cfg.eps = schedule.eps;
    AdanState adan = adan_init(params, adan_cfg);
    EmaState ema = ema_init(params, schedule.ema_decay);
    Rng sampler(cfg.seed, "sampler");

    TrainResult result;
    const auto t0 = std::chrono::steady_clock::now();
    const int p = schedule.patch;
    const int hp = p * cfg.scale;

    for (int iter = 0; iter < schedule.iters; ++iter) {
        Tensor lr_batch(schedule.batch, 3, p, p);
        Tensor hr_batch(schedule.batch, 3, hp, hp);
        for (int b = 0; b < schedule.batch; ++b) {
            const auto& item = data.items[eligible[sampler.next_below(eligible.size())]];
            const int y0 = int(sampler.next_below(std::uint64_t(item.lr.h() - p + 1)));
            const int x0 = int(sampler.next_below(std::uint64_t(item.lr.w() - p + 1)));
            if (schedule.augment) {
                const int t = int(sampler.next_below(8));
                Tensor lr_patch(1, 3, p, p), hr_patch(1, 3, hp, hp);
                copy_patch(lr_patch, 0, item.lr, y0, x0, p);
                copy_patch(hr_patch, 0, item.hr, y0 * cfg.scale, x0 * cfg.scale, hp);
                lr_patch = dihedral_apply(lr_patch, t);
                hr_patch = dihedral_apply(hr_patch, t);
                copy_patch(lr_batch, b, lr_patch, 0, 0, p);
                copy_patch(hr_batch, b, hr_patch, 0, 0, hp);
            } else {
                Tensor lr_view(1, 3, p, p), hr_view(1, 3, hp, hp);
                copy_patch(lr_view, 0, item.lr, y0, x0, p);
                copy_patch(hr_view, 0, item.hr, y0 * cfg.scale, x0 * cfg.scale, hp);
                copy_patch(lr_batch, b, lr_view, 0, 0, p);
                copy_patch(hr_batch, b, hr_view, 0, 0, hp);
            }
        }

        Tape tape;
        TapeCtx ctx(tape, params);
        const Tape::Id input = tape.leaf(std::move(lr_batch));
        const Tape::Id target = tape.leaf(std::move(hr_batch));
        const Tape::Id pred = lcan_graph(ctx, input, cfg);
        const Tape::Id loss = tape.l1_loss(pred, target);

        const double loss_value = double(tape.value(loss)[0]);
        if (!std::isfinite(loss_value))
            throw NumericError("train: loss became non-finite at iteration " +
                               std::to_string(iter));

        auto grads = tape.backward(loss);
        std::vector<Tensor> param_grads;
        param_grads.reserve(ctx.param_ids().size());
        for (Tape::Id id : ctx.param_ids()) param_grads.push_back(std::move(grads[id]));

        adan_step(params, param_grads, adan);
        ema_update(ema, params);

        result.losses.push_back(loss_value);
        result.seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }

    result.params = ema_apply(ema, params);
    return result;
}

std::string loss_trace_csv(const TrainResult& result, double learning_rate) {
    std::string csv = "iteration,loss,learning_rate,seconds_elapsed\n";
    char line[128];
    for (std::size_t i = 0; i < result.losses.size(); ++i) {
        std::snprintf(line, sizeof(line), "%zu,%.8g,%.8g,%.3f\n", i + 1, result.losses[i],
                      learning_rate, result.seconds[i]);
        csv += line;
    }
    return csv;
}

}  // namespace lckasr
