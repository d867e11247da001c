#include "grid2seq/grid_lstm.hpp"

#include <cmath>
#include <cstring>

namespace g2s {

namespace {

const char* kGateNames[5] = {"in", "forget", "out", "cand", "mix"};

struct CellView {
    // pointers into the cached activation tensors for one interior cell
    double *gi, *gf, *go, *gm, *cand, *tanhc;
};

// Five pre-activations then the gate nonlinearities, writing s/c and the
// activation cache. `pre` is caller scratch of size 5*d.
void cell_forward(const GridLstmParams& p, const double* x, const double* s_left,
                  const double* c_left, const double* s_above, const double* c_above,
                  double* s_out, double* c_out, const CellView* cache, double* pre) {
    const std::size_t d = p.hidden, m = p.input_dim;
    for (std::size_t k = 0; k < 5; ++k) {
        double* pk = pre + k * d;
        affine_into(x, m, p.w_in[k].value, pk, false);
        affine_into(s_left, d, p.w_horiz[k].value, pk, true);
        affine_into(s_above, d, p.w_vert[k].value, pk, true);
        const double* b = p.bias[k].value.data();
        for (std::size_t i = 0; i < d; ++i) pk[i] += b[i];
    }
    const double* pi = pre + kGateIn * d;
    const double* pf = pre + kGateForget * d;
    const double* po = pre + kGateOut * d;
    const double* pc = pre + kGateCand * d;
    const double* pm = pre + kGateMix * d;
    for (std::size_t i = 0; i < d; ++i) {
        const double gi = 1.0 / (1.0 + std::exp(-pi[i]));
        const double gf = 1.0 / (1.0 + std::exp(-pf[i]));
        const double go = 1.0 / (1.0 + std::exp(-po[i]));
        const double gm = 1.0 / (1.0 + std::exp(-pm[i]));
        const double cand = std::tanh(pc[i]);
        const double c = gf * (gm * c_left[i] + (1.0 - gm) * c_above[i]) + cand * gi;
        const double tc = std::tanh(c);
        c_out[i] = c;
        s_out[i] = tc * go;
        if (cache) {
            cache->gi[i] = gi;
            cache->gf[i] = gf;
            cache->go[i] = go;
            cache->gm[i] = gm;
            cache->cand[i] = cand;
            cache->tanhc[i] = tc;
        }
    }
}

} // namespace

GridLstmParams::GridLstmParams(std::size_t input_dim_, std::size_t hidden_, SeededRng& rng,
                               const std::string& prefix)
    : input_dim(input_dim_), hidden(hidden_) {
    for (std::size_t k = 0; k < 5; ++k) {
        const std::string g = kGateNames[k];
        w_in[k] = Parameter(prefix + ".w_in." + g, glorot_init(rng, {hidden, input_dim}));
        w_horiz[k] = Parameter(prefix + ".w_horiz." + g, glorot_init(rng, {hidden, hidden}));
        w_vert[k] = Parameter(prefix + ".w_vert." + g, glorot_init(rng, {hidden, hidden}));
        bias[k] = Parameter(prefix + ".bias." + g, Tensor({hidden}));
    }
}

std::vector<Parameter*> GridLstmParams::parameters() {
    std::vector<Parameter*> out;
    for (std::size_t k = 0; k < 5; ++k) {
        out.push_back(&w_in[k]);
        out.push_back(&w_horiz[k]);
        out.push_back(&w_vert[k]);
        out.push_back(&bias[k]);
    }
    return out;
}

void GridLstmParams::zero_grads() {
    for (Parameter* p : parameters()) p->zero_grad();
}

RowState GridState::row_state(std::size_t n) const {
    RowState out(cols, hidden);
    std::memcpy(out.s.data(), s.at3(n, 1), sizeof(double) * cols * hidden);
    std::memcpy(out.c.data(), c.at3(n, 1), sizeof(double) * cols * hidden);
    return out;
}

CellStep cell_step(const Tensor& x, const Tensor& s_left, const Tensor& c_left,
                   const Tensor& s_above, const Tensor& c_above, const GridLstmParams& p) {
    if (x.numel() != p.input_dim)
        fail_invalid("cell_step: input " + x.shape_str() + " does not match input_dim " +
                     std::to_string(p.input_dim));
    for (const Tensor* t : {&s_left, &c_left, &s_above, &c_above})
        if (t->numel() != p.hidden)
            fail_invalid("cell_step: state " + t->shape_str() + " does not match hidden " +
                         std::to_string(p.hidden));
    const std::size_t d = p.hidden;
    CellStep out{Tensor({d}), Tensor({d}), Tensor({d}), Tensor({d}),
                 Tensor({d}), Tensor({d}), Tensor({d})};
    Tensor tanhc({d});
    std::vector<double> pre(5 * d);
    CellView view{out.gate_in.data(), out.gate_forget.data(), out.gate_out.data(),
                  out.gate_mix.data(), out.cand.data(), tanhc.data()};
    cell_forward(p, x.data(), s_left.data(), c_left.data(), s_above.data(), c_above.data(),
                 out.s.data(), out.c.data(), &view, pre.data());
    return out;
}

GridState forward_grid(const Tensor& inputs, const GridLstmParams& p, GridSchedule schedule,
                       std::uint64_t* cell_counter) {
    if (inputs.rank() != 3 || inputs.extent(2) != p.input_dim)
        fail_invalid("forward_grid: inputs " + inputs.shape_str() +
                     " must be [rows x cols x " + std::to_string(p.input_dim) + "]");
    const std::size_t rows = inputs.extent(0), cols = inputs.extent(1), d = p.hidden;

    GridState g;
    g.rows = rows;
    g.cols = cols;
    g.hidden = d;
    g.s = Tensor({rows + 1, cols + 1, d});
    g.c = Tensor({rows + 1, cols + 1, d});
    for (Tensor* t : {&g.gate_in, &g.gate_forget, &g.gate_out, &g.gate_mix, &g.cand, &g.tanh_c})
        *t = Tensor({rows, cols, d});

    std::vector<double> pre(5 * d);
    auto eval_cell = [&](std::size_t n, std::size_t t) {
        CellView view{g.gate_in.at3(n - 1, t - 1), g.gate_forget.at3(n - 1, t - 1),
                      g.gate_out.at3(n - 1, t - 1), g.gate_mix.at3(n - 1, t - 1),
                      g.cand.at3(n - 1, t - 1),     g.tanh_c.at3(n - 1, t - 1)};
        cell_forward(p, inputs.at3(n - 1, t - 1), g.s.at3(n, t - 1), g.c.at3(n, t - 1),
                     g.s.at3(n - 1, t), g.c.at3(n - 1, t), g.s.at3(n, t), g.c.at3(n, t), &view,
                     pre.data());
        if (cell_counter) ++*cell_counter;
    };

    switch (schedule) {
    case GridSchedule::kRowMajor:
        for (std::size_t n = 1; n <= rows; ++n)
            for (std::size_t t = 1; t <= cols; ++t) eval_cell(n, t);
        break;
    case GridSchedule::kColumnMajor:
        for (std::size_t t = 1; t <= cols; ++t)
            for (std::size_t n = 1; n <= rows; ++n) eval_cell(n, t);
        break;
    case GridSchedule::kAntiDiagonal:
        for (std::size_t wave = 2; wave <= rows + cols; ++wave) {
            const std::size_t n_lo = wave > cols ? wave - cols : 1;
            const std::size_t n_hi = std::min(rows, wave - 1);
            for (std::size_t n = n_lo; n <= n_hi; ++n) eval_cell(n, wave - n);
        }
        break;
    }
    return g;
}

RowState forward_row(const Tensor& row_inputs, const RowState* prev_row, const GridLstmParams& p,
                     std::uint64_t* cell_counter) {
    if (row_inputs.rank() != 2 || row_inputs.extent(1) != p.input_dim)
        fail_invalid("forward_row: inputs " + row_inputs.shape_str() +
                     " must be [cols x " + std::to_string(p.input_dim) + "]");
    const std::size_t cols = row_inputs.extent(0), d = p.hidden;
    if (prev_row && prev_row->cols() != cols)
        fail_invalid("forward_row: previous row has " + std::to_string(prev_row->cols()) +
                     " columns, inputs have " + std::to_string(cols));

    RowState out(cols, d);
    std::vector<double> pre(5 * d);
    std::vector<double> zero(d, 0.0);
    for (std::size_t t = 0; t < cols; ++t) {
        const double* s_left = t == 0 ? zero.data() : out.s.row(t - 1);
        const double* c_left = t == 0 ? zero.data() : out.c.row(t - 1);
        const double* s_above = prev_row ? prev_row->s.row(t) : zero.data();
        const double* c_above = prev_row ? prev_row->c.row(t) : zero.data();
        cell_forward(p, row_inputs.row(t), s_left, c_left, s_above, c_above, out.s.row(t),
                     out.c.row(t), nullptr, pre.data());
        if (cell_counter) ++*cell_counter;
    }
    return out;
}

void backward_grid(const GridState& grid, const Tensor& inputs, const Tensor& d_hidden,
                   GridLstmParams& p, Tensor* d_inputs) {
    const std::size_t rows = grid.rows, cols = grid.cols, d = grid.hidden, m = p.input_dim;
    if (grid.gate_in.numel() == 0)
        throw Error(Error::kState, "backward_grid: grid has no cached activations");
    if (d_hidden.rank() != 3 || d_hidden.extent(0) != rows || d_hidden.extent(1) != cols ||
        d_hidden.extent(2) != d)
        fail_invalid("backward_grid: upstream gradient " + d_hidden.shape_str() +
                     " does not match grid interior");
    if (d_inputs && !d_inputs->same_shape(inputs))
        fail_invalid("backward_grid: d_inputs shape mismatch");

    // accumulators over the full lattice; border entries absorb scatter and
    // are dropped
    Tensor ds({rows + 1, cols + 1, d});
    Tensor dc({rows + 1, cols + 1, d});
    std::vector<double> dpre(5 * d);

    for (std::size_t n = rows; n >= 1; --n) {
        for (std::size_t t = cols; t >= 1; --t) {
            const double* gi = grid.gate_in.at3(n - 1, t - 1);
            const double* gf = grid.gate_forget.at3(n - 1, t - 1);
            const double* go = grid.gate_out.at3(n - 1, t - 1);
            const double* gm = grid.gate_mix.at3(n - 1, t - 1);
            const double* cand = grid.cand.at3(n - 1, t - 1);
            const double* tanhc = grid.tanh_c.at3(n - 1, t - 1);
            const double* c_left = grid.c.at3(n, t - 1);
            const double* c_above = grid.c.at3(n - 1, t);

            double* ds_cell = ds.at3(n, t);
            double* dc_cell = dc.at3(n, t);
            const double* up = d_hidden.at3(n - 1, t - 1);

            double* dpi = dpre.data() + kGateIn * d;
            double* dpf = dpre.data() + kGateForget * d;
            double* dpo = dpre.data() + kGateOut * d;
            double* dpc = dpre.data() + kGateCand * d;
            double* dpm = dpre.data() + kGateMix * d;

            double* dc_left = dc.at3(n, t - 1);
            double* dc_above = dc.at3(n - 1, t);

            for (std::size_t i = 0; i < d; ++i) {
                const double ds_i = ds_cell[i] + up[i];
                const double dcv = dc_cell[i] + ds_i * go[i] * (1.0 - tanhc[i] * tanhc[i]);
                const double mix = gm[i] * c_left[i] + (1.0 - gm[i]) * c_above[i];

                dpo[i] = ds_i * tanhc[i] * go[i] * (1.0 - go[i]);
                dpf[i] = dcv * mix * gf[i] * (1.0 - gf[i]);
                dpi[i] = dcv * cand[i] * gi[i] * (1.0 - gi[i]);
                dpc[i] = dcv * gi[i] * (1.0 - cand[i] * cand[i]);
                const double dmix = dcv * gf[i];
                dpm[i] = dmix * (c_left[i] - c_above[i]) * gm[i] * (1.0 - gm[i]);
                dc_left[i] += dmix * gm[i];
                dc_above[i] += dmix * (1.0 - gm[i]);
            }

            const double* x = inputs.at3(n - 1, t - 1);
            const double* s_left = grid.s.at3(n, t - 1);
            const double* s_above = grid.s.at3(n - 1, t);
            double* dx = d_inputs ? d_inputs->at3(n - 1, t - 1) : nullptr;
            double* ds_left = ds.at3(n, t - 1);
            double* ds_above = ds.at3(n - 1, t);
            for (std::size_t k = 0; k < 5; ++k) {
                const double* dpk = dpre.data() + k * d;
                affine_backward_raw(x, m, p.w_in[k].value, dpk, d, dx, p.w_in[k].grad.data(),
                                    p.bias[k].grad.data());
                affine_backward_raw(s_left, d, p.w_horiz[k].value, dpk, d, ds_left,
                                    p.w_horiz[k].grad.data(), nullptr);
                affine_backward_raw(s_above, d, p.w_vert[k].value, dpk, d, ds_above,
                                    p.w_vert[k].grad.data(), nullptr);
            }
        }
    }
}

} // namespace g2s
