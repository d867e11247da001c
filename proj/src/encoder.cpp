#include "grid2seq/encoder.hpp"

#include <cstring>

namespace g2s {

std::size_t EncoderConfig::total_reduction() const {
    std::size_t r = 1;
    for (std::size_t f : pool_factors) r *= f;
    return r;
}

void EncoderConfig::validate() const {
    if (num_layers == 0) fail_invalid("encoder: num_layers must be >= 1");
    if (hidden_per_direction == 0) fail_invalid("encoder: hidden_per_direction must be >= 1");
    if (pool_factors.size() != num_layers)
        fail_invalid("encoder: " + std::to_string(pool_factors.size()) +
                     " pool factors for " + std::to_string(num_layers) + " layers");
    for (std::size_t f : pool_factors)
        if (f == 0) fail_invalid("encoder: pool factor must be >= 1");
}

EncoderParams::EncoderParams(std::size_t feat_dim, const EncoderConfig& cfg, SeededRng& rng) {
    cfg.validate();
    const std::size_t d = cfg.hidden_per_direction;
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        const std::size_t in_dim = l == 0 ? feat_dim : 2 * d;
        const std::string base = "enc.l" + std::to_string(l);
        fwd.emplace_back(in_dim, d, rng, base + ".fwd");
        bwd.emplace_back(in_dim, d, rng, base + ".bwd");
    }
}

std::vector<Parameter*> EncoderParams::parameters() {
    std::vector<Parameter*> out;
    for (std::size_t l = 0; l < fwd.size(); ++l) {
        for (Parameter* p : fwd[l].parameters()) out.push_back(p);
        for (Parameter* p : bwd[l].parameters()) out.push_back(p);
    }
    return out;
}

PoolTrace max_pool_time(const Tensor& seq, std::size_t factor) {
    if (seq.rank() != 2) fail_invalid("max_pool_time: expected rank-2 input");
    if (factor == 0) fail_invalid("max_pool_time: factor must be >= 1");
    const std::size_t t_len = seq.extent(0), k = seq.extent(1);
    const std::size_t out_len = (t_len + factor - 1) / factor;
    PoolTrace tr;
    tr.in_len = t_len;
    tr.out = Tensor({out_len, k});
    tr.argmax.assign(out_len * k, 0);
    for (std::size_t w = 0; w < out_len; ++w) {
        const std::size_t lo = w * factor;
        const std::size_t hi = std::min(t_len, lo + factor);
        for (std::size_t j = 0; j < k; ++j) {
            double best = seq.at2(lo, j);
            std::size_t best_t = lo;
            for (std::size_t t = lo + 1; t < hi; ++t) {
                if (seq.at2(t, j) > best) {
                    best = seq.at2(t, j);
                    best_t = t;
                }
            }
            tr.out.at2(w, j) = best;
            tr.argmax[w * k + j] = best_t;
        }
    }
    return tr;
}

void max_pool_time_backward(const PoolTrace& pool, const Tensor& d_out, Tensor& d_in) {
    const std::size_t out_len = pool.out.extent(0), k = pool.out.extent(1);
    if (!d_out.same_shape(pool.out) || d_in.extent(0) != pool.in_len || d_in.extent(1) != k)
        fail_invalid("max_pool_time_backward: shape mismatch");
    for (std::size_t w = 0; w < out_len; ++w)
        for (std::size_t j = 0; j < k; ++j)
            d_in.at2(pool.argmax[w * k + j], j) += d_out.at2(w, j);
}

Tensor bilstm_layer(const Tensor& seq, const LstmCellParams& fwd, const LstmCellParams& bwd) {
    LstmTrace f = lstm_scan(seq, fwd, false);
    LstmTrace b = lstm_scan(seq, bwd, true);
    const std::size_t t_len = seq.extent(0), d = fwd.hidden;
    Tensor out({t_len, 2 * d});
    for (std::size_t t = 0; t < t_len; ++t) {
        std::memcpy(out.row(t), f.h.row(t), d * sizeof(double));
        std::memcpy(out.row(t) + d, b.h.row(t), d * sizeof(double));
    }
    return out;
}

EncoderTrace encode(const Tensor& x, const EncoderConfig& cfg, const EncoderParams& params,
                    double dropout_rate, SeededRng* dropout_rng) {
    cfg.validate();
    if (x.rank() != 2) fail_invalid("encode: expected [T x F] input, got " + x.shape_str());
    if (params.fwd.size() != cfg.num_layers)
        fail_invalid("encode: parameter stack has " + std::to_string(params.fwd.size()) +
                     " layers, config expects " + std::to_string(cfg.num_layers));
    const std::size_t d = cfg.hidden_per_direction;
    const bool use_dropout = dropout_rate > 0.0 && dropout_rng != nullptr;

    EncoderTrace tr;
    Tensor cur = x;
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        tr.layer_inputs.push_back(cur);
        tr.fwd_traces.push_back(lstm_scan(cur, params.fwd[l], false));
        tr.bwd_traces.push_back(lstm_scan(cur, params.bwd[l], true));

        const std::size_t t_len = cur.extent(0);
        Tensor cat({t_len, 2 * d});
        for (std::size_t t = 0; t < t_len; ++t) {
            std::memcpy(cat.row(t), tr.fwd_traces[l].h.row(t), d * sizeof(double));
            std::memcpy(cat.row(t) + d, tr.bwd_traces[l].h.row(t), d * sizeof(double));
        }

        tr.concat.push_back(cat);
        tr.pools.push_back(max_pool_time(cat, cfg.pool_factors[l]));
        cur = tr.pools.back().out;

        // dropout on the layer output (after its pool keeps train-time pool
        // statistics aligned with inference)
        if (use_dropout) {
            Tensor mask(cur.shape());
            const double keep = 1.0 - dropout_rate;
            for (std::size_t i = 0; i < mask.numel(); ++i)
                mask[i] = dropout_rng->uniform01() < keep ? 1.0 / keep : 0.0;
            for (std::size_t i = 0; i < cur.numel(); ++i) cur[i] *= mask[i];
            tr.dropout_masks.push_back(std::move(mask));
        } else {
            tr.dropout_masks.emplace_back();
        }
    }
    tr.states.h = cur;
    return tr;
}

void encode_backward(const EncoderTrace& trace, const EncoderConfig& cfg, EncoderParams& params,
                     const Tensor& d_h, Tensor* d_x) {
    if (!d_h.same_shape(trace.states.h)) fail_invalid("encode_backward: upstream shape mismatch");
    Tensor d_cur = d_h;
    for (std::size_t li = cfg.num_layers; li-- > 0;) {
        if (trace.dropout_masks[li].numel() > 0)
            for (std::size_t i = 0; i < d_cur.numel(); ++i)
                d_cur[i] *= trace.dropout_masks[li][i];

        Tensor d_cat(trace.concat[li].shape());
        max_pool_time_backward(trace.pools[li], d_cur, d_cat);

        const std::size_t t_len = d_cat.extent(0), d = cfg.hidden_per_direction;
        Tensor d_fwd({t_len, d}), d_bwd({t_len, d});
        for (std::size_t t = 0; t < t_len; ++t) {
            std::memcpy(d_fwd.row(t), d_cat.row(t), d * sizeof(double));
            std::memcpy(d_bwd.row(t), d_cat.row(t) + d, d * sizeof(double));
        }

        const bool need_dx = li > 0 || d_x != nullptr;
        Tensor d_in;
        if (need_dx) d_in = Tensor(trace.layer_inputs[li].shape());
        lstm_scan_backward(trace.layer_inputs[li], params.fwd[li], trace.fwd_traces[li], false,
                           d_fwd, need_dx ? &d_in : nullptr);
        lstm_scan_backward(trace.layer_inputs[li], params.bwd[li], trace.bwd_traces[li], true,
                           d_bwd, need_dx ? &d_in : nullptr);
        if (li == 0) {
            if (d_x) {
                for (std::size_t i = 0; i < d_in.numel(); ++i) (*d_x)[i] += d_in[i];
            }
        } else {
            d_cur = std::move(d_in);
        }
    }
}

} // namespace g2s
