#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "grid2seq/grid_lstm.hpp"
#include "support/fd.hpp"
#include "support/scalar_grid_ref.hpp"

using namespace g2s;

namespace {

GridLstmParams zero_params(std::size_t m, std::size_t d) {
    GridLstmParams p;
    p.input_dim = m;
    p.hidden = d;
    const char* names[5] = {"in", "forget", "out", "cand", "mix"};
    for (std::size_t k = 0; k < 5; ++k) {
        p.w_in[k] = Parameter(std::string("g.w_in.") + names[k], Tensor({d, m}));
        p.w_horiz[k] = Parameter(std::string("g.w_horiz.") + names[k], Tensor({d, d}));
        p.w_vert[k] = Parameter(std::string("g.w_vert.") + names[k], Tensor({d, d}));
        p.bias[k] = Parameter(std::string("g.bias.") + names[k], Tensor({d}));
    }
    return p;
}

GridLstmParams random_params(std::size_t m, std::size_t d, std::uint64_t seed) {
    SeededRng rng(seed);
    return GridLstmParams(m, d, rng, "g");
}

Tensor random_inputs(std::size_t rows, std::size_t cols, std::size_t m, std::uint64_t seed) {
    SeededRng rng(seed);
    Tensor x({rows, cols, m});
    for (std::size_t i = 0; i < x.numel(); ++i) x[i] = rng.uniform(-1.5, 1.5);
    return x;
}

// the 2x2 fixture shared with the scalar reference
scalar_ref::CellWeights fixture_weights() {
    scalar_ref::CellWeights w{};
    double wx[5] = {0.10, -0.20, 0.30, 0.25, -0.15};
    double wh[5] = {0.05, 0.15, -0.10, 0.20, 0.10};
    double wv[5] = {-0.05, 0.10, 0.20, -0.25, 0.05};
    double b[5] = {0.01, -0.02, 0.03, 0.04, -0.01};
    for (int k = 0; k < 5; ++k) {
        w.wx[k] = wx[k];
        w.wh[k] = wh[k];
        w.wv[k] = wv[k];
        w.b[k] = b[k];
    }
    return w;
}

GridLstmParams fixture_params() {
    scalar_ref::CellWeights w = fixture_weights();
    GridLstmParams p = zero_params(1, 1);
    for (std::size_t k = 0; k < 5; ++k) {
        p.w_in[k].value[0] = w.wx[k];
        p.w_horiz[k].value[0] = w.wh[k];
        p.w_vert[k].value[0] = w.wv[k];
        p.bias[k].value[0] = w.b[k];
    }
    return p;
}

} // namespace

TEST_CASE("cell with zero weights and zero neighbors is a fixed point") {
    GridLstmParams p = zero_params(3, 2);
    Tensor x({3}, {1.0, -2.0, 0.5});
    Tensor z({2});
    CellStep out = cell_step(x, z, z, z, z, p);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(out.c[i] == 0.0);
        CHECK(out.s[i] == 0.0);
    }
}

TEST_CASE("hand-evaluated scalar cell: half-open gates mix the neighbor cells") {
    GridLstmParams p = zero_params(1, 1);
    Tensor x({1}, {0.0});
    Tensor z({1});
    Tensor c_left({1}, {2.0});
    Tensor c_above({1}, {4.0});
    CellStep out = cell_step(x, z, c_left, z, c_above, p);
    // all gates sigmoid(0) = 0.5, candidate 0: c = 0.5*(0.5*2 + 0.5*4) = 1.5
    CHECK(out.c[0] == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(out.s[0] == doctest::Approx(std::tanh(1.5) * 0.5).epsilon(1e-15));
    CHECK(out.gate_mix[0] == 0.5);
}

TEST_CASE("mix gate saturation selects one neighbor branch") {
    GridLstmParams p = zero_params(1, 1);
    Tensor x({1}, {0.0});
    Tensor z({1});
    Tensor c_left({1}, {2.0});
    Tensor c_above({1}, {4.0});

    p.bias[kGateMix].value[0] = 20.0; // mix -> 1: forget gate times c_left only
    CellStep left = cell_step(x, z, c_left, z, c_above, p);
    CHECK(left.c[0] == doctest::Approx(0.5 * 2.0).epsilon(1e-8));

    p.bias[kGateMix].value[0] = -20.0; // mix -> 0: forget gate times c_above only
    CellStep above = cell_step(x, z, c_left, z, c_above, p);
    CHECK(above.c[0] == doctest::Approx(0.5 * 4.0).epsilon(1e-8));
}

TEST_CASE("1x1 grid reduces to a single cell step with zero neighbors") {
    GridLstmParams p = random_params(3, 2, 77);
    Tensor inputs = random_inputs(1, 1, 3, 78);
    GridState g = forward_grid(inputs, p);

    Tensor x({3});
    std::memcpy(x.data(), inputs.at3(0, 0), 3 * sizeof(double));
    Tensor z({2});
    CellStep cs = cell_step(x, z, z, z, z, p);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(g.s_at(1, 1)[i] == cs.s[i]);
        CHECK(g.c_at(1, 1)[i] == cs.c[i]);
    }
    // boundary stays exactly zero
    for (std::size_t t = 0; t <= 1; ++t)
        for (std::size_t i = 0; i < 2; ++i) CHECK(g.s_at(t, 0)[i] == 0.0);
}

TEST_CASE("2x2 scalar grid matches the independent scalar reference") {
    GridLstmParams p = fixture_params();
    Tensor inputs({2, 2, 1}, {0.5, -1.0, 1.5, 0.25});
    GridState g = forward_grid(inputs, p);

    scalar_ref::CellWeights w = fixture_weights();
    std::vector<std::vector<double>> x = {{0.5, -1.0}, {1.5, 0.25}};
    scalar_ref::GridOut ref = scalar_ref::grid(w, x);
    for (std::size_t n = 1; n <= 2; ++n)
        for (std::size_t t = 1; t <= 2; ++t) {
            CHECK(std::fabs(g.s_at(t, n)[0] - ref.s[n][t]) < 1e-12);
            CHECK(std::fabs(g.c_at(t, n)[0] - ref.c[n][t]) < 1e-12);
        }

    // values frozen from the reference implementation
    CHECK(g.s_at(1, 1)[0] == doctest::Approx(0.045776867925001657).epsilon(1e-14));
    CHECK(g.c_at(2, 1)[0] == doctest::Approx(-0.070075470903062737).epsilon(1e-14));
    CHECK(g.s_at(1, 2)[0] == doctest::Approx(0.13798538689991136).epsilon(1e-14));
    CHECK(g.c_at(2, 2)[0] == doctest::Approx(0.10666080303829015).epsilon(1e-14));
    CHECK(g.s_at(2, 2)[0] == doctest::Approx(0.055389945626115461).epsilon(1e-14));
}

TEST_CASE("forward_row composition reproduces forward_grid bit-identically") {
    const std::size_t rows = 4, cols = 5, m = 6, d = 3;
    GridLstmParams p = random_params(m, d, 101);
    Tensor inputs = random_inputs(rows, cols, m, 102);
    GridState g = forward_grid(inputs, p);

    RowState prev;
    const RowState* prev_ptr = nullptr;
    for (std::size_t n = 1; n <= rows; ++n) {
        Tensor row_in({cols, m});
        std::memcpy(row_in.data(), inputs.at3(n - 1, 0), cols * m * sizeof(double));
        RowState r = forward_row(row_in, prev_ptr, p);
        RowState from_grid = g.row_state(n);
        CHECK(std::memcmp(r.s.data(), from_grid.s.data(), cols * d * sizeof(double)) == 0);
        CHECK(std::memcmp(r.c.data(), from_grid.c.data(), cols * d * sizeof(double)) == 0);
        prev = std::move(r);
        prev_ptr = &prev;
    }
}

TEST_CASE("evaluation order does not change the grid") {
    const std::size_t rows = 3, cols = 4, m = 2, d = 3;
    GridLstmParams p = random_params(m, d, 55);
    Tensor inputs = random_inputs(rows, cols, m, 56);
    GridState a = forward_grid(inputs, p, GridSchedule::kRowMajor);
    GridState b = forward_grid(inputs, p, GridSchedule::kColumnMajor);
    GridState c = forward_grid(inputs, p, GridSchedule::kAntiDiagonal);
    CHECK(std::memcmp(a.s.data(), b.s.data(), a.s.numel() * sizeof(double)) == 0);
    CHECK(std::memcmp(a.s.data(), c.s.data(), a.s.numel() * sizeof(double)) == 0);
    CHECK(std::memcmp(a.c.data(), c.c.data(), a.c.numel() * sizeof(double)) == 0);
}

TEST_CASE("mix term stays within the neighbor cell envelope") {
    const std::size_t rows = 4, cols = 4, m = 3, d = 4;
    GridLstmParams p = random_params(m, d, 31);
    Tensor inputs = random_inputs(rows, cols, m, 32);
    GridState g = forward_grid(inputs, p);
    for (std::size_t n = 1; n <= rows; ++n)
        for (std::size_t t = 1; t <= cols; ++t)
            for (std::size_t i = 0; i < d; ++i) {
                const double cl = g.c_at(t - 1, n)[i];
                const double ca = g.c_at(t, n - 1)[i];
                const double gm = g.gate_mix.at3(n - 1, t - 1)[i];
                const double mix = gm * cl + (1.0 - gm) * ca;
                CHECK(mix >= std::min(cl, ca) - 1e-15);
                CHECK(mix <= std::max(cl, ca) + 1e-15);
            }
}

TEST_CASE("gate activations live in their codomains") {
    GridLstmParams p = random_params(2, 3, 91);
    Tensor inputs = random_inputs(3, 3, 2, 92);
    GridState g = forward_grid(inputs, p);
    for (std::size_t i = 0; i < g.gate_in.numel(); ++i) {
        for (const Tensor* t : {&g.gate_in, &g.gate_forget, &g.gate_out, &g.gate_mix}) {
            CHECK((*t)[i] > 0.0);
            CHECK((*t)[i] < 1.0);
        }
        CHECK(g.cand[i] > -1.0);
        CHECK(g.cand[i] < 1.0);
    }
}

TEST_CASE("zero upstream gradient leaves parameter grads zero") {
    GridLstmParams p = random_params(2, 2, 13);
    Tensor inputs = random_inputs(2, 3, 2, 14);
    GridState g = forward_grid(inputs, p);
    Tensor up({2, 3, 2});
    p.zero_grads();
    backward_grid(g, inputs, up, p, nullptr);
    for (Parameter* q : p.parameters())
        for (std::size_t i = 0; i < q->grad.numel(); ++i) CHECK(q->grad[i] == 0.0);
}

static void check_grid_gradients(std::size_t rows, std::size_t cols, std::size_t m,
                                 std::size_t d, std::uint64_t seed, double tol) {
    GridLstmParams p = random_params(m, d, seed);
    Tensor inputs = random_inputs(rows, cols, m, seed + 1);
    SeededRng urng(seed + 2);
    Tensor up({rows, cols, d});
    for (std::size_t i = 0; i < up.numel(); ++i) up[i] = urng.uniform(-1, 1);

    auto loss = [&]() {
        GridState g = forward_grid(inputs, p);
        double acc = 0.0;
        for (std::size_t n = 1; n <= rows; ++n)
            for (std::size_t t = 1; t <= cols; ++t)
                for (std::size_t i = 0; i < d; ++i)
                    acc += up.at3(n - 1, t - 1)[i] * g.s_at(t, n)[i];
        return acc;
    };

    GridState g = forward_grid(inputs, p);
    p.zero_grads();
    Tensor d_inputs(inputs.shape());
    backward_grid(g, inputs, up, p, &d_inputs);

    for (Parameter* q : p.parameters()) {
        INFO(q->name);
        CHECK(fd::max_rel_err(q->value, q->grad, loss) < tol);
    }
    CHECK(fd::max_rel_err(inputs, d_inputs, loss) < tol);
}

TEST_CASE("2x2 scalar grid gradients match central differences") {
    check_grid_gradients(2, 2, 1, 1, 301, 1e-6);
}

TEST_CASE("4x3 grid gradients match central differences") {
    check_grid_gradients(3, 4, 6, 4, 303, 1e-5);
}

TEST_CASE("cell evaluation counters follow the row-wise cost model") {
    const std::size_t cols = 7, m = 2, d = 2, n_rows = 5;
    GridLstmParams p = random_params(m, d, 41);
    std::uint64_t count = 0;
    RowState prev;
    const RowState* prev_ptr = nullptr;
    SeededRng rng(42);
    for (std::size_t n = 0; n < n_rows; ++n) {
        Tensor row_in({cols, m});
        for (std::size_t i = 0; i < row_in.numel(); ++i) row_in[i] = rng.uniform(-1, 1);
        RowState r = forward_row(row_in, prev_ptr, p, &count);
        prev = std::move(r);
        prev_ptr = &prev;
    }
    CHECK(count == n_rows * cols);

    std::uint64_t grid_count = 0;
    Tensor inputs = random_inputs(n_rows, cols, m, 43);
    forward_grid(inputs, p, GridSchedule::kRowMajor, &grid_count);
    CHECK(grid_count == n_rows * cols);
}

TEST_CASE("dimension mismatches are reported") {
    GridLstmParams p = random_params(3, 2, 7);
    Tensor bad({2}, {0.0, 0.0});
    Tensor z({2});
    CHECK_THROWS_AS(cell_step(bad, z, z, z, z, p), Error);
    Tensor row_in({4, 3});
    RowState wrong(5, 2);
    CHECK_THROWS_AS(forward_row(row_in, &wrong, p), Error);
}
