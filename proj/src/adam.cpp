#include "grid2seq/adam.hpp"

#include <cmath>

namespace g2s {

void AdamState::ensure(const std::vector<Parameter*>& params) {
    for (const Parameter* p : params) {
        if (!m.count(p->name)) {
            m.emplace(p->name, Tensor(p->value.shape()));
            v.emplace(p->name, Tensor(p->value.shape()));
        }
    }
}

double global_grad_norm(const std::vector<Parameter*>& params) {
    double sq = 0.0;
    for (const Parameter* p : params)
        for (std::size_t i = 0; i < p->grad.numel(); ++i) sq += p->grad[i] * p->grad[i];
    return std::sqrt(sq);
}

void clip_global_norm(const std::vector<Parameter*>& params, double max_norm) {
    const double norm = global_grad_norm(params);
    if (norm <= max_norm || norm == 0.0) return;
    const double scale = max_norm / norm;
    for (Parameter* p : params)
        for (std::size_t i = 0; i < p->grad.numel(); ++i) p->grad[i] *= scale;
}

void adam_step(const std::vector<Parameter*>& params, AdamState& state, const AdamConfig& cfg,
               double lr) {
    state.ensure(params);
    if (cfg.clip_norm > 0.0) clip_global_norm(params, cfg.clip_norm);

    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.step));
    for (Parameter* p : params) {
        Tensor& mt = state.m.at(p->name);
        Tensor& vt = state.v.at(p->name);
        if (!mt.same_shape(p->value))
            fail_invalid("adam: moment shape mismatch for " + p->name);
        for (std::size_t i = 0; i < p->value.numel(); ++i) {
            const double g = p->grad[i];
            mt[i] = cfg.beta1 * mt[i] + (1.0 - cfg.beta1) * g;
            vt[i] = cfg.beta2 * vt[i] + (1.0 - cfg.beta2) * g * g;
            const double m_hat = mt[i] / bc1;
            const double v_hat = vt[i] / bc2;
            p->value[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
        }
    }
}

} // namespace g2s
