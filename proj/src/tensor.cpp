#include "grid2seq/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace g2s {

std::size_t Tensor::checked_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) {
        if (e == 0) fail_invalid("Tensor: zero extent in shape");
        n *= e;
    }
    return n;
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape_[i]);
    }
    return s + "]";
}

void affine_into(const double* x, std::size_t m, const Tensor& W, double* y, bool accumulate) {
    const std::size_t k = W.extent(0);
    const double* w = W.data();
    for (std::size_t i = 0; i < k; ++i) {
        const double* wr = w + i * m;
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) acc += wr[j] * x[j];
        if (accumulate)
            y[i] += acc;
        else
            y[i] = acc;
    }
}

Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b) {
    if (W.rank() != 2 || x.rank() != 1 || b.rank() != 1)
        fail_invalid("affine: expected W rank 2, x and b rank 1; got W " + W.shape_str() +
                     ", x " + x.shape_str() + ", b " + b.shape_str());
    if (W.extent(1) != x.extent(0) || W.extent(0) != b.extent(0))
        fail_invalid("affine: shape mismatch between W " + W.shape_str() + ", x " +
                     x.shape_str() + ", b " + b.shape_str());
    Tensor y({W.extent(0)});
    affine_into(x.data(), x.numel(), W, y.data(), false);
    for (std::size_t i = 0; i < y.numel(); ++i) y[i] += b[i];
    return y;
}

void affine_backward_raw(const double* x, std::size_t m, const Tensor& W, const double* dy,
                         std::size_t k, double* dx, double* dW, double* db) {
    const double* w = W.data();
    for (std::size_t i = 0; i < k; ++i) {
        const double g = dy[i];
        if (db) db[i] += g;
        const double* wr = w + i * m;
        double* dwr = dW ? dW + i * m : nullptr;
        if (dx && dwr) {
            for (std::size_t j = 0; j < m; ++j) {
                dx[j] += wr[j] * g;
                dwr[j] += x[j] * g;
            }
        } else if (dwr) {
            for (std::size_t j = 0; j < m; ++j) dwr[j] += x[j] * g;
        } else if (dx) {
            for (std::size_t j = 0; j < m; ++j) dx[j] += wr[j] * g;
        }
    }
}

void affine_backward(const Tensor& x, const Tensor& W, const Tensor& dy,
                     Tensor& dx, Tensor& dW, Tensor& db) {
    if (!dW.same_shape(W) || dx.numel() != x.numel() || dy.numel() != W.extent(0))
        fail_invalid("affine_backward: shape mismatch, W " + W.shape_str() + ", dy " +
                     dy.shape_str());
    affine_backward_raw(x.data(), x.numel(), W, dy.data(), dy.numel(), dx.data(), dW.data(),
                        db.data());
}

Tensor sigmoid(const Tensor& x) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
    return y;
}

Tensor tanh_act(const Tensor& x) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) y[i] = std::tanh(x[i]);
    return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
    Tensor dx(y.shape());
    for (std::size_t i = 0; i < y.numel(); ++i) dx[i] = dy[i] * y[i] * (1.0 - y[i]);
    return dx;
}

Tensor tanh_backward(const Tensor& y, const Tensor& dy) {
    Tensor dx(y.shape());
    for (std::size_t i = 0; i < y.numel(); ++i) dx[i] = dy[i] * (1.0 - y[i] * y[i]);
    return dx;
}

Tensor log_softmax(const Tensor& x) {
    if (x.rank() != 1 || x.numel() == 0) fail_invalid("log_softmax: expected non-empty rank-1 input");
    double mx = x[0];
    for (std::size_t i = 1; i < x.numel(); ++i) mx = std::max(mx, x[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) sum += std::exp(x[i] - mx);
    const double lse = mx + std::log(sum);
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) y[i] = x[i] - lse;
    return y;
}

Tensor log_softmax_backward(const Tensor& y, const Tensor& dy) {
    double s = 0.0;
    for (std::size_t i = 0; i < dy.numel(); ++i) s += dy[i];
    Tensor dx(y.shape());
    for (std::size_t i = 0; i < y.numel(); ++i) dx[i] = dy[i] - std::exp(y[i]) * s;
    return dx;
}

MaxOverAxis max_over_axis(const Tensor& x) {
    if (x.rank() != 2) fail_invalid("max_over_axis: expected rank-2 input, got " + x.shape_str());
    const std::size_t t_len = x.extent(0), d = x.extent(1);
    if (t_len == 0) fail_invalid("max_over_axis: empty time axis");
    MaxOverAxis out;
    out.values = Tensor({d});
    out.argmax.assign(d, 0);
    for (std::size_t k = 0; k < d; ++k) out.values[k] = x.at2(0, k);
    for (std::size_t t = 1; t < t_len; ++t) {
        const double* r = x.row(t);
        for (std::size_t k = 0; k < d; ++k) {
            if (r[k] > out.values[k]) { // strict: ties stay at the earliest index
                out.values[k] = r[k];
                out.argmax[k] = t;
            }
        }
    }
    return out;
}

void max_over_axis_backward(const MaxOverAxis& pooled, const Tensor& dy, Tensor& dx) {
    const std::size_t d = pooled.argmax.size();
    if (dy.numel() != d || dx.rank() != 2 || dx.extent(1) != d)
        fail_invalid("max_over_axis_backward: shape mismatch");
    for (std::size_t k = 0; k < d; ++k) dx.at2(pooled.argmax[k], k) += dy[k];
}

Tensor glorot_init(SeededRng& rng, std::vector<std::size_t> shape) {
    Tensor t(std::move(shape));
    const double fan_out = double(t.extent(0));
    const double fan_in = double(t.numel()) / fan_out;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-limit, limit);
    return t;
}

} // namespace g2s
