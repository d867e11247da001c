#include "grid2seq/model.hpp"

#include <cmath>
#include <cstring>

namespace g2s {

Model::Model(ModelConfig cfg_, SeededRng& rng) : cfg(cfg_) {
    cfg.encoder.validate();
    if (cfg.vocab_size < 2) fail_invalid("model: vocabulary must hold at least <bos> and <eos>");
    encoder = EncoderParams(cfg.feat_dim, cfg.encoder, rng);
    grid = GridLstmParams(cfg.grid_input_dim(), cfg.grid_hidden, rng, "grid");
    embed = Parameter("embed", glorot_init(rng, {cfg.vocab_size, cfg.embed_dim}));
    w_read = Parameter("readout.w", glorot_init(rng, {cfg.grid_hidden, cfg.grid_hidden}));
    b_read = Parameter("readout.b", Tensor({cfg.grid_hidden}));
    w_out = Parameter("out.w", glorot_init(rng, {cfg.vocab_size, cfg.grid_hidden}));
    b_out = Parameter("out.b", Tensor({cfg.vocab_size}));
}

std::vector<Parameter*> Model::parameters() {
    std::vector<Parameter*> out = encoder.parameters();
    for (Parameter* p : grid.parameters()) out.push_back(p);
    out.push_back(&embed);
    out.push_back(&w_read);
    out.push_back(&b_read);
    out.push_back(&w_out);
    out.push_back(&b_out);
    return out;
}

void Model::zero_grads() {
    for (Parameter* p : parameters()) p->zero_grad();
}

std::size_t Model::num_params() const {
    std::size_t n = 0;
    for (Parameter* p : const_cast<Model*>(this)->parameters()) n += p->value.numel();
    return n;
}

namespace {

void check_labels(const std::vector<std::size_t>& labels, std::size_t vocab_size) {
    for (std::size_t w : labels) {
        if (w >= vocab_size)
            fail_invalid("label id " + std::to_string(w) + " out of range (vocab " +
                         std::to_string(vocab_size) + ")");
        if (w == Vocabulary::kBos || w == Vocabulary::kEos)
            fail_invalid("label sequence must not contain <bos>/<eos>");
    }
}

} // namespace

Tensor build_grid_inputs(const EncoderStates& h, const std::vector<std::size_t>& labels,
                         const Tensor& embed) {
    const std::size_t cols = h.reduced_len();
    const std::size_t enc_dim = h.h.extent(1);
    const std::size_t e = embed.extent(1);
    check_labels(labels, embed.extent(0));

    const std::size_t rows = labels.size() + 1;
    Tensor inputs({rows, cols, enc_dim + e});
    for (std::size_t n = 0; n < rows; ++n) {
        const std::size_t prev = n == 0 ? Vocabulary::kBos : labels[n - 1];
        const double* emb = embed.row(prev);
        for (std::size_t t = 0; t < cols; ++t) {
            double* dst = inputs.at3(n, t);
            std::memcpy(dst, h.h.row(t), enc_dim * sizeof(double));
            std::memcpy(dst + enc_dim, emb, e * sizeof(double));
        }
    }
    return inputs;
}

Tensor build_row_inputs(const EncoderStates& h, std::size_t prev_label, const Tensor& embed) {
    const std::size_t cols = h.reduced_len();
    const std::size_t enc_dim = h.h.extent(1);
    const std::size_t e = embed.extent(1);
    if (prev_label >= embed.extent(0)) fail_invalid("build_row_inputs: label id out of range");
    Tensor inputs({cols, enc_dim + e});
    const double* emb = embed.row(prev_label);
    for (std::size_t t = 0; t < cols; ++t) {
        std::memcpy(inputs.row(t), h.h.row(t), enc_dim * sizeof(double));
        std::memcpy(inputs.row(t) + enc_dim, emb, e * sizeof(double));
    }
    return inputs;
}

Tensor readout_logits(const Model& m, const double* row_s, std::size_t cols,
                      MaxOverAxis* pool_out) {
    const std::size_t d = m.cfg.grid_hidden;
    Tensor row({cols, d});
    std::memcpy(row.data(), row_s, cols * d * sizeof(double));
    MaxOverAxis pool = max_over_axis(row);
    Tensor read = tanh_act(affine(pool.values, m.w_read.value, m.b_read.value));
    Tensor logits = affine(read, m.w_out.value, m.b_out.value);
    if (pool_out) *pool_out = std::move(pool);
    return logits;
}

TeacherForced forward_rows(const Model& m, EncoderTrace enc,
                           const std::vector<std::size_t>& labels, double dropout_rate,
                           SeededRng* dropout_rng) {
    check_labels(labels, m.cfg.vocab_size);
    const std::size_t rows = labels.size() + 1;
    const std::size_t d = m.cfg.grid_hidden;
    const std::size_t v = m.cfg.vocab_size;
    const bool use_dropout = dropout_rate > 0.0 && dropout_rng != nullptr;

    TeacherForced out;
    out.labels = labels;
    out.grid_inputs = build_grid_inputs(enc.states, labels, m.embed.value);
    out.enc = std::move(enc);
    out.grid = forward_grid(out.grid_inputs, m.grid);

    const std::size_t cols = out.grid.cols;
    out.logits = Tensor({rows, v});
    if (use_dropout) out.readout_masks = Tensor({rows, d});
    for (std::size_t n = 1; n <= rows; ++n) {
        Tensor row({cols, d});
        std::memcpy(row.data(), out.grid.s_row(n), cols * d * sizeof(double));
        MaxOverAxis pool = max_over_axis(row);

        Tensor pooled_in = pool.values;
        if (use_dropout) {
            const double keep = 1.0 - dropout_rate;
            double* mask = out.readout_masks.row(n - 1);
            for (std::size_t i = 0; i < d; ++i) {
                mask[i] = dropout_rng->uniform01() < keep ? 1.0 / keep : 0.0;
                pooled_in[i] *= mask[i];
            }
        }
        Tensor read = tanh_act(affine(pooled_in, m.w_read.value, m.b_read.value));
        Tensor logits = affine(read, m.w_out.value, m.b_out.value);
        std::memcpy(out.logits.row(n - 1), logits.data(), v * sizeof(double));

        out.row_pools.push_back(std::move(pool));
        out.row_pooled_in.push_back(std::move(pooled_in));
        out.row_read.push_back(std::move(read));
    }
    return out;
}

TeacherForced forward_teacher_forced(const Model& m, const Tensor& x,
                                     const std::vector<std::size_t>& labels,
                                     double dropout_rate, SeededRng* dropout_rng) {
    EncoderTrace enc = encode(x, m.cfg.encoder, m.encoder, dropout_rate, dropout_rng);
    return forward_rows(m, std::move(enc), labels, dropout_rate, dropout_rng);
}

void backward_teacher_forced(Model& m, const TeacherForced& fwd, const Tensor& d_logits,
                             Tensor* d_x) {
    const std::size_t rows = fwd.labels.size() + 1;
    const std::size_t cols = fwd.grid.cols;
    const std::size_t d = m.cfg.grid_hidden;
    const std::size_t v = m.cfg.vocab_size;
    const std::size_t enc_dim = 2 * m.cfg.encoder.hidden_per_direction;
    if (d_logits.rank() != 2 || d_logits.extent(0) != rows || d_logits.extent(1) != v)
        fail_invalid("backward_teacher_forced: d_logits shape mismatch");

    // readout chain per row, scattering into the grid interior
    Tensor d_hidden({rows, cols, d});
    for (std::size_t n = 1; n <= rows; ++n) {
        Tensor d_row({v});
        std::memcpy(d_row.data(), d_logits.row(n - 1), v * sizeof(double));

        Tensor d_read({d});
        affine_backward(fwd.row_read[n - 1], m.w_out.value, d_row, d_read, m.w_out.grad,
                        m.b_out.grad);
        Tensor d_pre = tanh_backward(fwd.row_read[n - 1], d_read);
        Tensor d_pooled({d});
        affine_backward(fwd.row_pooled_in[n - 1], m.w_read.value, d_pre, d_pooled, m.w_read.grad,
                        m.b_read.grad);
        if (fwd.readout_masks.numel() > 0) {
            const double* mask = fwd.readout_masks.row(n - 1);
            for (std::size_t i = 0; i < d; ++i) d_pooled[i] *= mask[i];
        }
        // route through the per-feature max winners of this row
        const MaxOverAxis& pool = fwd.row_pools[n - 1];
        for (std::size_t i = 0; i < d; ++i)
            d_hidden.at3(n - 1, pool.argmax[i])[i] += d_pooled[i];
    }

    Tensor d_inputs(fwd.grid_inputs.shape());
    backward_grid(fwd.grid, fwd.grid_inputs, d_hidden, m.grid, &d_inputs);

    // split input grads into encoder-state and embedding contributions
    Tensor d_h({cols, enc_dim});
    for (std::size_t n = 0; n < rows; ++n) {
        const std::size_t prev = n == 0 ? Vocabulary::kBos : fwd.labels[n - 1];
        double* d_emb = m.embed.grad.row(prev);
        for (std::size_t t = 0; t < cols; ++t) {
            const double* src = d_inputs.at3(n, t);
            double* dh_row = d_h.row(t);
            for (std::size_t i = 0; i < enc_dim; ++i) dh_row[i] += src[i];
            for (std::size_t i = 0; i < m.cfg.embed_dim; ++i) d_emb[i] += src[enc_dim + i];
        }
    }

    encode_backward(fwd.enc, m.cfg.encoder, m.encoder, d_h, d_x);
}

std::vector<std::size_t> with_eos(const std::vector<std::size_t>& labels) {
    std::vector<std::size_t> refs = labels;
    refs.push_back(Vocabulary::kEos);
    return refs;
}

double loss_label_smoothed(const Tensor& logits, const std::vector<std::size_t>& refs,
                           double eps, Tensor* d_logits) {
    const std::size_t rows = logits.extent(0), v = logits.extent(1);
    if (refs.size() != rows)
        fail_invalid("loss: " + std::to_string(refs.size()) + " references for " +
                     std::to_string(rows) + " logit rows");
    if (eps < 0.0 || eps >= 1.0) fail_invalid("loss: label smoothing must lie in [0, 1)");
    const double off = v > 1 ? eps / double(v - 1) : 0.0;

    double total = 0.0;
    for (std::size_t n = 0; n < rows; ++n) {
        if (refs[n] >= v) fail_invalid("loss: reference id out of range");
        Tensor row({v});
        std::memcpy(row.data(), logits.row(n), v * sizeof(double));
        Tensor lsm = log_softmax(row);
        double row_loss = 0.0;
        for (std::size_t j = 0; j < v; ++j) {
            const double q = j == refs[n] ? 1.0 - eps : off;
            row_loss -= q * lsm[j];
        }
        total += row_loss;
        if (d_logits) {
            // d/dlogits of -sum q*log_softmax = softmax - q, averaged over rows
            for (std::size_t j = 0; j < v; ++j) {
                const double q = j == refs[n] ? 1.0 - eps : off;
                d_logits->at2(n, j) = (std::exp(lsm[j]) - q) / double(rows);
            }
        }
    }
    return total / double(rows);
}

double frame_error_rate(const Tensor& logits, const std::vector<std::size_t>& refs) {
    const std::size_t rows = logits.extent(0), v = logits.extent(1);
    if (refs.size() != rows) fail_invalid("frame_error_rate: shape mismatch");
    std::size_t wrong = 0;
    for (std::size_t n = 0; n < rows; ++n) {
        const double* row = logits.row(n);
        std::size_t best = 0;
        for (std::size_t j = 1; j < v; ++j)
            if (row[j] > row[best]) best = j;
        if (best != refs[n]) ++wrong;
    }
    return double(wrong) / double(rows);
}

double perplexity(const Tensor& logits, const std::vector<std::size_t>& refs) {
    const std::size_t rows = logits.extent(0), v = logits.extent(1);
    if (refs.size() != rows) fail_invalid("perplexity: shape mismatch");
    double nll = 0.0;
    for (std::size_t n = 0; n < rows; ++n) {
        Tensor row({v});
        std::memcpy(row.data(), logits.row(n), v * sizeof(double));
        nll -= log_softmax(row)[refs[n]];
    }
    return std::exp(nll / double(rows));
}

} // namespace g2s
