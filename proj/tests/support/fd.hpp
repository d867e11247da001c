#pragma once

// Central finite differences against an arbitrary scalar loss functor. Used
// as the gradient oracle in tests; it only ever calls forward passes.

#include <cmath>
#include <cstddef>
#include <functional>

#include "grid2seq/tensor.hpp"

namespace fd {

// relative error with an absolute floor: |a-n| / max(1, |a|, |n|)
inline double rel_err(double analytic, double numeric) {
    double scale = std::max(1.0, std::max(std::fabs(analytic), std::fabs(numeric)));
    return std::fabs(analytic - numeric) / scale;
}

// Perturbs every entry of `values` in place, re-evaluating `loss` each time,
// and returns the worst relative error against `analytic`.
inline double max_rel_err(g2s::Tensor& values, const g2s::Tensor& analytic,
                          const std::function<double()>& loss, double h = 1e-5) {
    double worst = 0.0;
    for (std::size_t i = 0; i < values.numel(); ++i) {
        const double orig = values[i];
        values[i] = orig + h;
        const double up = loss();
        values[i] = orig - h;
        const double down = loss();
        values[i] = orig;
        const double numeric = (up - down) / (2.0 * h);
        worst = std::max(worst, rel_err(analytic[i], numeric));
    }
    return worst;
}

} // namespace fd
