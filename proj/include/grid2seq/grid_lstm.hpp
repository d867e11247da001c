#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grid2seq/tensor.hpp"

namespace g2s {

/// Gate order shared by the recurrent cells.
enum Gate : std::size_t { kGateIn = 0, kGateForget = 1, kGateOut = 2, kGateCand = 3, kGateMix = 4 };

/// Weights of the two-dimensional LSTM cell: five gates (input, forget,
/// output, candidate, mix), each fed by the cell input, the horizontal
/// predecessor state and the vertical predecessor state, plus a bias.
struct GridLstmParams {
    std::size_t input_dim = 0;
    std::size_t hidden = 0;

    Parameter w_in[5];    // [d x m]
    Parameter w_horiz[5]; // [d x d], applied to s(t-1, n)
    Parameter w_vert[5];  // [d x d], applied to s(t, n-1)
    Parameter bias[5];    // [d]

    GridLstmParams() = default;
    GridLstmParams(std::size_t input_dim, std::size_t hidden, SeededRng& rng,
                   const std::string& prefix);

    std::vector<Parameter*> parameters();
    void zero_grads();
};

/// One row of grid states, indexed by column t = 0..cols-1. Used as the
/// vertical context when evaluating the next row, and cached per decoding
/// hypothesis.
struct RowState {
    Tensor s; // [cols x d]
    Tensor c; // [cols x d]

    RowState() = default;
    RowState(std::size_t cols, std::size_t hidden)
        : s({cols, hidden}), c({cols, hidden}) {}
    std::size_t cols() const { return s.rank() ? s.extent(0) : 0; }
};

/// Full (rows+1) x (cols+1) lattice of cell and hidden states. Index 0 on
/// either axis holds the zero boundary; interior cells live at n,t >= 1.
/// Gate activations are retained for the backward pass, indexed over the
/// interior only.
struct GridState {
    std::size_t cols = 0; // horizontal extent (reduced input length)
    std::size_t rows = 0; // vertical extent (output positions)
    std::size_t hidden = 0;

    Tensor s; // [(rows+1) x (cols+1) x d]
    Tensor c; // [(rows+1) x (cols+1) x d]

    Tensor gate_in, gate_forget, gate_out, gate_mix, cand, tanh_c; // [rows x cols x d]

    const double* s_at(std::size_t t, std::size_t n) const { return s.at3(n, t); }
    const double* c_at(std::size_t t, std::size_t n) const { return c.at3(n, t); }

    /// Contiguous [cols x d] slice of interior hidden states in row n (1-based).
    const double* s_row(std::size_t n) const { return s.at3(n, 1); }

    /// Copies interior row n (1-based) into a RowState.
    RowState row_state(std::size_t n) const;
};

enum class GridSchedule { kRowMajor, kColumnMajor, kAntiDiagonal };

/// Single cell evaluation, the public form of the recurrence. Gate
/// activations are returned so callers can inspect or cache them.
struct CellStep {
    Tensor s, c;
    Tensor gate_in, gate_forget, gate_out, gate_mix, cand;
};
CellStep cell_step(const Tensor& x, const Tensor& s_left, const Tensor& c_left,
                   const Tensor& s_above, const Tensor& c_above, const GridLstmParams& p);

/// Evaluates the full grid. `inputs` is [rows x cols x m]; the result is
/// independent of the schedule (each cell sees identical operands in any
/// dependency-respecting order).
GridState forward_grid(const Tensor& inputs, const GridLstmParams& p,
                       GridSchedule schedule = GridSchedule::kRowMajor,
                       std::uint64_t* cell_counter = nullptr);

/// Left-to-right scan of one row given the previous row's states (pass
/// nullptr for the zero first row). This is the decoding workhorse: one call
/// per emitted label, cols cell evaluations.
RowState forward_row(const Tensor& row_inputs, const RowState* prev_row,
                     const GridLstmParams& p, std::uint64_t* cell_counter = nullptr);

/// Reverse-mode pass over the whole lattice, from (cols, rows) back to (1, 1).
/// `d_hidden` carries upstream gradients on every interior hidden state,
/// laid out [rows x cols x d]. Parameter gradients accumulate into p; input
/// gradients accumulate into d_inputs when non-null.
void backward_grid(const GridState& grid, const Tensor& inputs, const Tensor& d_hidden,
                   GridLstmParams& p, Tensor* d_inputs);

} // namespace g2s
