#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "grid2seq/error.hpp"
#include "grid2seq/rng.hpp"

namespace g2s {

/// Dense row-major tensor of doubles. The whole library runs in 64-bit
/// precision; gradient checks depend on it.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != checked_numel(shape_))
            fail_invalid("Tensor: data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str());
    }

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_[axis]; }
    std::size_t numel() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // rank-2 [rows x cols] indexing
    double& at2(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at2(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    double* row(std::size_t i) { return data_.data() + i * shape_[1]; }
    const double* row(std::size_t i) const { return data_.data() + i * shape_[1]; }

    // rank-3 [a x b x c] indexing, returns pointer to the innermost vector
    double* at3(std::size_t i, std::size_t j) {
        return data_.data() + (i * shape_[1] + j) * shape_[2];
    }
    const double* at3(std::size_t i, std::size_t j) const {
        return data_.data() + (i * shape_[1] + j) * shape_[2];
    }

    void fill(double v) { data_.assign(data_.size(), v); }

    bool all_finite() const;

    std::string shape_str() const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    static std::size_t checked_numel(const std::vector<std::size_t>& shape);

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// A trainable tensor: value, gradient of the same shape, and a stable name
/// used by the optimizer and the checkpoint format.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string name_, Tensor value_)
        : name(std::move(name_)), value(std::move(value_)), grad(value.shape()) {}

    void zero_grad() { grad.fill(0.0); }
};

// ---- elementwise / linear primitives ---------------------------------------

/// W[k x m] * x[m] + b[k].
Tensor affine(const Tensor& x, const Tensor& W, const Tensor& b);

/// Accumulating backward of affine: dx += W^T dy, dW += dy x^T, db += dy.
void affine_backward(const Tensor& x, const Tensor& W, const Tensor& dy,
                     Tensor& dx, Tensor& dW, Tensor& db);

Tensor sigmoid(const Tensor& x);
Tensor tanh_act(const Tensor& x);

/// d(pre-activation) from the activation output: dy * y * (1 - y).
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy);
/// dy * (1 - y^2).
Tensor tanh_backward(const Tensor& y, const Tensor& dy);

/// Numerically stable log-softmax over a rank-1 tensor.
Tensor log_softmax(const Tensor& x);
/// Given y = log_softmax(x) and upstream dy: dx = dy - exp(y) * sum(dy).
Tensor log_softmax_backward(const Tensor& y, const Tensor& dy);

/// Per-feature max over the leading (time) axis of a [T x d] tensor.
/// Ties break toward the smallest index so the backward routing is
/// deterministic.
struct MaxOverAxis {
    Tensor values;                   // [d]
    std::vector<std::size_t> argmax; // [d], row index of each winner
};
MaxOverAxis max_over_axis(const Tensor& x);
/// Routes dy[k] to x[argmax[k]][k]; everything else gets zero.
void max_over_axis_backward(const MaxOverAxis& pooled, const Tensor& dy, Tensor& dx);

/// Glorot-uniform init: +-sqrt(6 / (fan_in + fan_out)) with fan_out = shape[0]
/// and fan_in = numel / shape[0].
Tensor glorot_init(SeededRng& rng, std::vector<std::size_t> shape);

// raw kernels used by the recurrent layers; y/x are unaliased
void affine_into(const double* x, std::size_t m, const Tensor& W, double* y, bool accumulate);
void affine_backward_raw(const double* x, std::size_t m, const Tensor& W, const double* dy,
                         std::size_t k, double* dx, double* dW, double* db);

} // namespace g2s
