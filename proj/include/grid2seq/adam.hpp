#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "grid2seq/tensor.hpp"

namespace g2s {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 5.0; // <= 0 disables clipping
};

/// First/second moments keyed by parameter name, so the set can grow when
/// pretraining adds encoder layers.
struct AdamState {
    std::uint64_t step = 0;
    std::map<std::string, Tensor> m;
    std::map<std::string, Tensor> v;

    /// Creates zero moments for any parameter that does not have them yet.
    void ensure(const std::vector<Parameter*>& params);
};

double global_grad_norm(const std::vector<Parameter*>& params);

/// Scales all gradients so their global norm is at most max_norm.
void clip_global_norm(const std::vector<Parameter*>& params, double max_norm);

/// Bias-corrected Adam update; clips gradients by global norm first.
void adam_step(const std::vector<Parameter*>& params, AdamState& state, const AdamConfig& cfg,
               double lr);

} // namespace g2s
