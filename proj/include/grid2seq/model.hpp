#pragma once

#include <vector>

#include "grid2seq/encoder.hpp"
#include "grid2seq/grid_lstm.hpp"
#include "grid2seq/vocab.hpp"

namespace g2s {

struct ModelConfig {
    std::size_t feat_dim = 8;
    std::size_t vocab_size = 24;
    EncoderConfig encoder;
    std::size_t grid_hidden = 32;
    std::size_t embed_dim = 16;

    std::size_t grid_input_dim() const {
        return 2 * encoder.hidden_per_direction + embed_dim;
    }
};

/// The full conditional model: encoder stack, grid layer, label embedding,
/// and the pooled tanh readout into the output softmax.
struct Model {
    ModelConfig cfg;
    EncoderParams encoder;
    GridLstmParams grid;
    Parameter embed;  // [V x e]
    Parameter w_read; // [d x d]
    Parameter b_read; // [d]
    Parameter w_out;  // [V x d]
    Parameter b_out;  // [V]

    Model() = default;
    Model(ModelConfig cfg, SeededRng& rng);

    std::vector<Parameter*> parameters();
    void zero_grads();
    std::size_t num_params() const;
};

/// Grid inputs for a teacher-forced lattice: entry (n, t') is the encoder
/// state at t' concatenated with the embedding of the previous label
/// (row 0 uses <bos>). Shape [(N+1) x T' x (2d_enc + e)].
Tensor build_grid_inputs(const EncoderStates& h, const std::vector<std::size_t>& labels,
                         const Tensor& embed);

/// Inputs for a single decoding row: [h_t' ; E[prev_label]] for every t'.
Tensor build_row_inputs(const EncoderStates& h, std::size_t prev_label, const Tensor& embed);

/// Teacher-forced forward output plus everything the backward pass needs.
struct TeacherForced {
    Tensor logits; // [(N+1) x V]
    GridState grid;
    std::vector<MaxOverAxis> row_pools;  // per-row argmax over horizontal states
    std::vector<Tensor> row_pooled_in;   // pooled vector after dropout, input to the readout
    std::vector<Tensor> row_read;        // tanh readout activations
    Tensor readout_masks;                // [(N+1) x d], empty when dropout off

    EncoderTrace enc;
    Tensor grid_inputs;
    std::vector<std::size_t> labels;
};

/// Runs the grid and readout on already-encoded states. Dropout applies to
/// the pooled readout vector only (encoder dropout happens inside encode()).
TeacherForced forward_rows(const Model& m, EncoderTrace enc,
                           const std::vector<std::size_t>& labels, double dropout_rate = 0.0,
                           SeededRng* dropout_rng = nullptr);

/// encode() + forward_rows(); rate/rng apply to both encoder layer outputs
/// and the pooled readout.
TeacherForced forward_teacher_forced(const Model& m, const Tensor& x,
                                     const std::vector<std::size_t>& labels,
                                     double dropout_rate = 0.0, SeededRng* dropout_rng = nullptr);

/// Readout of one grid row: max-pool over the horizontal states, affine +
/// tanh, output projection. Shared verbatim by training and decoding.
Tensor readout_logits(const Model& m, const double* row_s, std::size_t cols,
                      MaxOverAxis* pool_out = nullptr);

/// Accumulates gradients of all parameters given d(loss)/d(logits); frame
/// gradients go to d_x when non-null.
void backward_teacher_forced(Model& m, const TeacherForced& fwd, const Tensor& d_logits,
                             Tensor* d_x = nullptr);

/// Mean over rows of cross-entropy against the smoothed target: 1 - eps on
/// the reference id, eps / (V - 1) elsewhere. refs must already carry the
/// trailing <eos>. Fills d_logits (not accumulated) when non-null.
double loss_label_smoothed(const Tensor& logits, const std::vector<std::size_t>& refs,
                           double eps, Tensor* d_logits = nullptr);

/// Fraction of rows whose argmax differs from the reference; argmax ties
/// break toward the smaller id.
double frame_error_rate(const Tensor& logits, const std::vector<std::size_t>& refs);

/// exp of the mean negative log-probability of the references (unsmoothed).
double perplexity(const Tensor& logits, const std::vector<std::size_t>& refs);

/// Appends <eos> to a label sequence.
std::vector<std::size_t> with_eos(const std::vector<std::size_t>& labels);

} // namespace g2s
