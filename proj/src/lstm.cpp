#include "grid2seq/lstm.hpp"

#include <cmath>

namespace g2s {

namespace {

const char* kGateNames[4] = {"in", "forget", "out", "cand"};

// pre: scratch of size 4*d; writes h/c and optionally the activation row
void step_kernel(const LstmCellParams& p, const double* x, const double* h_prev,
                 const double* c_prev, double* h_out, double* c_out, double* gates_row,
                 double* tanh_c_row, double* pre) {
    const std::size_t d = p.hidden, m = p.input_dim;
    for (std::size_t k = 0; k < 4; ++k) {
        double* pk = pre + k * d;
        affine_into(x, m, p.w_in[k].value, pk, false);
        affine_into(h_prev, d, p.w_rec[k].value, pk, true);
        const double* b = p.bias[k].value.data();
        for (std::size_t i = 0; i < d; ++i) pk[i] += b[i];
    }
    for (std::size_t i = 0; i < d; ++i) {
        const double gi = 1.0 / (1.0 + std::exp(-pre[0 * d + i]));
        const double gf = 1.0 / (1.0 + std::exp(-pre[1 * d + i]));
        const double go = 1.0 / (1.0 + std::exp(-pre[2 * d + i]));
        const double cand = std::tanh(pre[3 * d + i]);
        const double c = gf * c_prev[i] + gi * cand;
        const double tc = std::tanh(c);
        c_out[i] = c;
        h_out[i] = go * tc;
        if (gates_row) {
            gates_row[0 * d + i] = gi;
            gates_row[1 * d + i] = gf;
            gates_row[2 * d + i] = go;
            gates_row[3 * d + i] = cand;
            tanh_c_row[i] = tc;
        }
    }
}

} // namespace

LstmCellParams::LstmCellParams(std::size_t input_dim_, std::size_t hidden_, SeededRng& rng,
                               const std::string& prefix)
    : input_dim(input_dim_), hidden(hidden_) {
    for (std::size_t k = 0; k < 4; ++k) {
        const std::string g = kGateNames[k];
        w_in[k] = Parameter(prefix + ".w_in." + g, glorot_init(rng, {hidden, input_dim}));
        w_rec[k] = Parameter(prefix + ".w_rec." + g, glorot_init(rng, {hidden, hidden}));
        bias[k] = Parameter(prefix + ".bias." + g, Tensor({hidden}));
    }
}

std::vector<Parameter*> LstmCellParams::parameters() {
    std::vector<Parameter*> out;
    for (std::size_t k = 0; k < 4; ++k) {
        out.push_back(&w_in[k]);
        out.push_back(&w_rec[k]);
        out.push_back(&bias[k]);
    }
    return out;
}

void lstm_step(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
               const LstmCellParams& p, Tensor& h_out, Tensor& c_out) {
    if (x.numel() != p.input_dim || h_prev.numel() != p.hidden || c_prev.numel() != p.hidden)
        fail_invalid("lstm_step: operand shapes x " + x.shape_str() + ", h " +
                     h_prev.shape_str() + " do not match cell dims");
    h_out = Tensor({p.hidden});
    c_out = Tensor({p.hidden});
    std::vector<double> pre(4 * p.hidden);
    step_kernel(p, x.data(), h_prev.data(), c_prev.data(), h_out.data(), c_out.data(), nullptr,
                nullptr, pre.data());
}

LstmTrace lstm_scan(const Tensor& seq, const LstmCellParams& p, bool reverse) {
    if (seq.rank() != 2 || seq.extent(1) != p.input_dim)
        fail_invalid("lstm_scan: sequence " + seq.shape_str() + " does not match input_dim " +
                     std::to_string(p.input_dim));
    const std::size_t t_len = seq.extent(0), d = p.hidden;
    LstmTrace tr{Tensor({t_len, d}), Tensor({t_len, d}), Tensor({t_len, 4 * d}),
                 Tensor({t_len, d})};
    std::vector<double> pre(4 * d);
    std::vector<double> zero(d, 0.0);
    for (std::size_t step = 0; step < t_len; ++step) {
        const std::size_t t = reverse ? t_len - 1 - step : step;
        const double* h_prev = step == 0 ? zero.data() : tr.h.row(reverse ? t + 1 : t - 1);
        const double* c_prev = step == 0 ? zero.data() : tr.c.row(reverse ? t + 1 : t - 1);
        step_kernel(p, seq.row(t), h_prev, c_prev, tr.h.row(t), tr.c.row(t), tr.gates.row(t),
                    tr.tanh_c.row(t), pre.data());
    }
    return tr;
}

void lstm_scan_backward(const Tensor& seq, LstmCellParams& p, const LstmTrace& trace,
                        bool reverse, const Tensor& d_h, Tensor* d_seq) {
    const std::size_t t_len = seq.extent(0), d = p.hidden, m = p.input_dim;
    if (!d_h.same_shape(trace.h)) fail_invalid("lstm_scan_backward: upstream shape mismatch");

    std::vector<double> dh(d, 0.0), dc(d, 0.0), dpre(4 * d), zero(d, 0.0);
    std::vector<double> dh_next(d);
    for (std::size_t step = 0; step < t_len; ++step) {
        // walk opposite to the scan direction
        const std::size_t t = reverse ? step : t_len - 1 - step;
        const double* gates = trace.gates.row(t);
        const double* tanh_c = trace.tanh_c.row(t);
        const double* up = d_h.row(t);

        const bool has_prev = step + 1 < t_len;
        const std::size_t t_prev = reverse ? t + 1 : t - 1;
        const double* c_prev = has_prev ? trace.c.row(t_prev) : zero.data();

        for (std::size_t i = 0; i < d; ++i) {
            const double gi = gates[0 * d + i];
            const double gf = gates[1 * d + i];
            const double go = gates[2 * d + i];
            const double cand = gates[3 * d + i];
            const double dh_i = dh[i] + up[i];
            const double dc_i = dc[i] + dh_i * go * (1.0 - tanh_c[i] * tanh_c[i]);

            dpre[0 * d + i] = dc_i * cand * gi * (1.0 - gi);
            dpre[1 * d + i] = dc_i * c_prev[i] * gf * (1.0 - gf);
            dpre[2 * d + i] = dh_i * tanh_c[i] * go * (1.0 - go);
            dpre[3 * d + i] = dc_i * gi * (1.0 - cand * cand);
            dc[i] = dc_i * gf;
        }

        const double* h_prev = has_prev ? trace.h.row(t_prev) : zero.data();
        double* dx = d_seq ? d_seq->row(t) : nullptr;
        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        for (std::size_t k = 0; k < 4; ++k) {
            const double* dpk = dpre.data() + k * d;
            affine_backward_raw(seq.row(t), m, p.w_in[k].value, dpk, d, dx,
                                p.w_in[k].grad.data(), p.bias[k].grad.data());
            affine_backward_raw(h_prev, d, p.w_rec[k].value, dpk, d, dh_next.data(),
                                p.w_rec[k].grad.data(), nullptr);
        }
        dh.swap(dh_next);
    }
}

} // namespace g2s
