#include "lckasr/optim.hpp"

#include <cmath>

#include "lckasr/common.hpp"

namespace lckasr {

AdanState adan_init(const ParamStore& params, const AdanConfig& hyper) {
    AdanState s;
    s.hyper = hyper;
    for (const auto& e : params.entries()) {
        s.m.emplace_back(e.tensor.shape());
        s.v.emplace_back(e.tensor.shape());
        s.n.emplace_back(e.tensor.shape());
        s.prev_grad.emplace_back(e.tensor.shape());
    }
    return s;
}

void adan_step(ParamStore& params, const std::vector<Tensor>& grads, AdanState& state) {
    if (grads.size() != params.count())
        throw ConfigError("adan_step: gradient count does not match parameter count");

    const AdanConfig& h = state.hyper;
    const bool first = state.step == 0;
    state.step += 1;
    const double bc1 = 1.0 - std::pow(h.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(h.beta2, double(state.step));
    const double bc3 = 1.0 - std::pow(h.beta3, double(state.step));
    const double decay_div = 1.0 + h.lr * h.weight_decay;

    auto& entries = params.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        Tensor& theta = entries[i].tensor;
        const Tensor& grad = grads[i];
        if (!(grad.shape() == theta.shape()))
            throw ConfigError("adan_step: gradient shape mismatch for '" + entries[i].name + "'");
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        Tensor& n = state.n[i];
        Tensor& prev = state.prev_grad[i];

        for (std::size_t j = 0; j < theta.size(); ++j) {
            const double g = double(grad[j]);
            const double diff = first ? 0.0 : g - double(prev[j]);
            const double mj = h.beta1 * double(m[j]) + (1.0 - h.beta1) * g;
            const double vj = h.beta2 * double(v[j]) + (1.0 - h.beta2) * diff;
            const double u = g + h.beta2 * diff;
            const double nj = h.beta3 * double(n[j]) + (1.0 - h.beta3) * u * u;
            const double denom = std::sqrt(nj / bc3) + h.eps;
            const double update = (mj / bc1 + h.beta2 * vj / bc2) / denom;
            theta[j] = float((double(theta[j]) - h.lr * update) / decay_div);
            m[j] = float(mj);
            v[j] = float(vj);
            n[j] = float(nj);
            prev[j] = float(g);
        }
    }
}

EmaState ema_init(const ParamStore& params, double decay) {
    EmaState s;
    s.decay = decay;
    for (const auto& e : params.entries()) s.shadow.emplace_back(e.tensor.shape());
    return s;
}

void ema_update(EmaState& ema, const ParamStore& params) {
    const auto& entries = params.entries();
    if (ema.shadow.size() != entries.size())
        throw ConfigError("ema_update: state does not match parameter count");
    ema.steps += 1;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        Tensor& s = ema.shadow[i];
        const Tensor& p = entries[i].tensor;
        if (!(s.shape() == p.shape()))
            throw ConfigError("ema_update: shape mismatch for '" + entries[i].name + "'");
        for (std::size_t j = 0; j < s.size(); ++j)
            s[j] = float(ema.decay * double(s[j]) + (1.0 - ema.decay) * double(p[j]));
    }
}

ParamStore ema_apply(const EmaState& ema, const ParamStore& params) {
    ParamStore out;
    out.fingerprint = params.fingerprint;
    out.format_version = params.format_version;
    const auto& entries = params.entries();
    const double correction = 1.0 - std::pow(ema.decay, double(ema.steps));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (ema.steps == 0) {
            out.add(entries[i].name, entries[i].dims, entries[i].tensor);
            continue;
        }
        Tensor t = ema.shadow[i];
        for (std::size_t j = 0; j < t.size(); ++j) t[j] = float(double(t[j]) / correction);
        out.add(entries[i].name, entries[i].dims, std::move(t));
    }
    return out;
}

}  // namespace lckasr
