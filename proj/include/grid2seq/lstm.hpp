#pragma once

#include <string>
#include <vector>

#include "grid2seq/tensor.hpp"

namespace g2s {

/// One-dimensional LSTM cell weights: four gates (input, forget, output,
/// candidate) over the frame input and the recurrent state.
struct LstmCellParams {
    std::size_t input_dim = 0;
    std::size_t hidden = 0;

    Parameter w_in[4];  // [d x m]
    Parameter w_rec[4]; // [d x d]
    Parameter bias[4];  // [d]

    LstmCellParams() = default;
    LstmCellParams(std::size_t input_dim, std::size_t hidden, SeededRng& rng,
                   const std::string& prefix);

    std::vector<Parameter*> parameters();
};

/// Single recurrence step: c = f*c_prev + i*cand, h = o*tanh(c).
void lstm_step(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
               const LstmCellParams& p, Tensor& h_out, Tensor& c_out);

/// Activations retained from a directional scan, aligned to input frames
/// (index t refers to frame t regardless of scan direction).
struct LstmTrace {
    Tensor h;      // [T x d]
    Tensor c;      // [T x d]
    Tensor gates;  // [T x 4d], order: in, forget, out, cand
    Tensor tanh_c; // [T x d]
};

LstmTrace lstm_scan(const Tensor& seq, const LstmCellParams& p, bool reverse);

/// Accumulates parameter grads into p and, when non-null, frame grads into
/// d_seq. d_h carries upstream gradients on every h output of the scan.
void lstm_scan_backward(const Tensor& seq, LstmCellParams& p, const LstmTrace& trace,
                        bool reverse, const Tensor& d_h, Tensor* d_seq);

} // namespace g2s
