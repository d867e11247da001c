#pragma once

#include <vector>

#include "grid2seq/lstm.hpp"

namespace g2s {

/// Stack layout: one bidirectional layer per entry of pool_factors, with a
/// time max-pool of that factor after the layer (factor 1 = no pooling).
/// The product of the factors is the total reduction T / T'.
struct EncoderConfig {
    std::size_t num_layers = 2;
    std::size_t hidden_per_direction = 32;
    std::vector<std::size_t> pool_factors = {2, 4};

    std::size_t total_reduction() const;
    void validate() const;
};

struct EncoderParams {
    std::vector<LstmCellParams> fwd, bwd; // one pair per layer

    EncoderParams() = default;
    EncoderParams(std::size_t feat_dim, const EncoderConfig& cfg, SeededRng& rng);

    std::size_t num_layers() const { return fwd.size(); }
    std::vector<Parameter*> parameters();
};

/// Encoder output: per reduced frame, forward and backward states
/// concatenated.
struct EncoderStates {
    Tensor h; // [T' x 2d]
    std::size_t reduced_len() const { return h.extent(0); }
};

/// Non-overlapping max pooling over time; a final partial window pools over
/// whatever frames remain. argmax holds absolute input rows, [outT x k].
struct PoolTrace {
    Tensor out;
    std::vector<std::size_t> argmax;
    std::size_t in_len = 0;
};
PoolTrace max_pool_time(const Tensor& seq, std::size_t factor);
void max_pool_time_backward(const PoolTrace& pool, const Tensor& d_out, Tensor& d_in);

/// Both directional scans concatenated per frame, zero states at both ends.
Tensor bilstm_layer(const Tensor& seq, const LstmCellParams& fwd, const LstmCellParams& bwd);

/// Everything encode() retains for the backward pass.
struct EncoderTrace {
    std::vector<Tensor> layer_inputs;     // input of each layer
    std::vector<LstmTrace> fwd_traces, bwd_traces;
    std::vector<Tensor> concat;           // [T x 2d] per layer, after dropout
    std::vector<Tensor> dropout_masks;    // empty tensor when dropout off
    std::vector<PoolTrace> pools;
    EncoderStates states;
};

/// Runs the stack. Dropout (inverted scaling) is applied to each layer's
/// concatenated output when rate > 0 and rng is non-null; inference passes
/// rate 0.
EncoderTrace encode(const Tensor& x, const EncoderConfig& cfg, const EncoderParams& params,
                    double dropout_rate = 0.0, SeededRng* dropout_rng = nullptr);

/// Accumulates parameter grads into params; input-frame grads into d_x when
/// non-null.
void encode_backward(const EncoderTrace& trace, const EncoderConfig& cfg, EncoderParams& params,
                     const Tensor& d_h, Tensor* d_x);

} // namespace g2s
