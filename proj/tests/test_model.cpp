#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>

#include "grid2seq/model.hpp"
#include "support/fd.hpp"

using namespace g2s;

namespace {

ModelConfig small_config() {
    ModelConfig cfg;
    cfg.feat_dim = 3;
    cfg.vocab_size = 5;
    cfg.encoder.num_layers = 2;
    cfg.encoder.hidden_per_direction = 4;
    cfg.encoder.pool_factors = {2, 2};
    cfg.grid_hidden = 4;
    cfg.embed_dim = 3;
    return cfg;
}

Tensor random_frames(std::size_t t_len, std::size_t f, std::uint64_t seed) {
    SeededRng rng(seed);
    Tensor x({t_len, f});
    for (std::size_t i = 0; i < x.numel(); ++i) x[i] = rng.uniform(-1, 1);
    return x;
}

} // namespace

TEST_CASE("build_grid_inputs row and column bookkeeping") {
    SeededRng rng(1);
    Tensor embed = glorot_init(rng, {5, 3});
    EncoderStates h;
    h.h = Tensor({2, 4});
    for (std::size_t i = 0; i < h.h.numel(); ++i) h.h[i] = double(i);

    // empty transcript: single row fed by <bos>
    Tensor empty_in = build_grid_inputs(h, {}, embed);
    CHECK(empty_in.extent(0) == 1);
    CHECK(empty_in.extent(1) == 2);
    CHECK(empty_in.extent(2) == 7);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(empty_in.at3(0, 0)[4 + i] == embed.row(Vocabulary::kBos)[i]);

    // one label: row 0 uses <bos>, row 1 uses the label's embedding
    Tensor in = build_grid_inputs(h, {3}, embed);
    CHECK(in.extent(0) == 2);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(in.at3(0, 1)[4 + i] == embed.row(Vocabulary::kBos)[i]);
        CHECK(in.at3(1, 1)[4 + i] == embed.row(3)[i]);
    }
    // encoder components are constant down each column
    for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t i = 0; i < 4; ++i) CHECK(in.at3(0, t)[i] == in.at3(1, t)[i]);

    CHECK_THROWS_AS(build_grid_inputs(h, {99}, embed), Error);
    CHECK_THROWS_AS(build_grid_inputs(h, {Vocabulary::kBos}, embed), Error);
}

TEST_CASE("changing a later label leaves earlier logit rows untouched") {
    ModelConfig cfg = small_config();
    SeededRng rng(7);
    Model m(cfg, rng);
    Tensor x = random_frames(12, 3, 8);

    std::vector<std::size_t> labels = {2, 3, 4};
    TeacherForced base = forward_teacher_forced(m, x, labels);

    std::vector<std::size_t> perturbed = labels;
    perturbed[1] = 4; // change w_2
    TeacherForced alt = forward_teacher_forced(m, x, perturbed);

    // rows 1 and 2 (indices 0 and 1) consume <bos> and w_1: unchanged exactly
    for (std::size_t n = 0; n < 2; ++n)
        for (std::size_t jv = 0; jv < cfg.vocab_size; ++jv)
            CHECK(base.logits.at2(n, jv) == alt.logits.at2(n, jv));
    // row 3 consumes w_2 and must differ
    bool differs = false;
    for (std::size_t jv = 0; jv < cfg.vocab_size; ++jv)
        if (base.logits.at2(2, jv) != alt.logits.at2(2, jv)) differs = true;
    CHECK(differs);
}

TEST_CASE("zero grid weights collapse every row to the same readout") {
    ModelConfig cfg = small_config();
    SeededRng rng(9);
    Model m(cfg, rng);
    for (std::size_t k = 0; k < 5; ++k) {
        m.grid.w_in[k].value.fill(0.0);
        m.grid.w_horiz[k].value.fill(0.0);
        m.grid.w_vert[k].value.fill(0.0);
        m.grid.bias[k].value.fill(0.0);
    }
    Tensor x = random_frames(8, 3, 10);
    TeacherForced out = forward_teacher_forced(m, x, {2, 3});

    Tensor read = tanh_act(m.b_read.value);
    Tensor expect = affine(read, m.w_out.value, m.b_out.value);
    for (std::size_t n = 0; n < 3; ++n)
        for (std::size_t jv = 0; jv < cfg.vocab_size; ++jv)
            CHECK(out.logits.at2(n, jv) == doctest::Approx(expect[jv]).epsilon(1e-14));
}

TEST_CASE("row-1 logits react to a perturbation of the last encoder state") {
    ModelConfig cfg = small_config();
    SeededRng rng(11);
    Model m(cfg, rng);
    Tensor x = random_frames(12, 3, 12);

    EncoderTrace enc = encode(x, cfg.encoder, m.encoder);
    TeacherForced base = forward_rows(m, enc, {2, 3});

    EncoderTrace enc2 = encode(x, cfg.encoder, m.encoder);
    const std::size_t last = enc2.states.reduced_len() - 1;
    for (std::size_t i = 0; i < enc2.states.h.extent(1); ++i) enc2.states.h.at2(last, i) += 0.5;
    TeacherForced alt = forward_rows(m, enc2, {2, 3});

    bool differs = false;
    for (std::size_t jv = 0; jv < cfg.vocab_size; ++jv)
        if (base.logits.at2(0, jv) != alt.logits.at2(0, jv)) differs = true;
    CHECK(differs);
}

TEST_CASE("full pipeline gradients match central differences") {
    ModelConfig cfg;
    cfg.feat_dim = 3;
    cfg.vocab_size = 5;
    cfg.encoder.num_layers = 2;
    cfg.encoder.hidden_per_direction = 3;
    cfg.encoder.pool_factors = {2, 2};
    cfg.grid_hidden = 4;
    cfg.embed_dim = 3;
    SeededRng rng(13);
    Model m(cfg, rng);
    Tensor x = random_frames(12, 3, 14);
    std::vector<std::size_t> labels = {2, 3, 4};
    std::vector<std::size_t> refs = with_eos(labels);

    auto loss = [&]() {
        TeacherForced out = forward_teacher_forced(m, x, labels);
        return loss_label_smoothed(out.logits, refs, 0.1);
    };

    m.zero_grads();
    TeacherForced out = forward_teacher_forced(m, x, labels);
    Tensor d_logits(out.logits.shape());
    loss_label_smoothed(out.logits, refs, 0.1, &d_logits);
    Tensor d_x(x.shape());
    backward_teacher_forced(m, out, d_logits, &d_x);

    for (Parameter* q : m.parameters()) {
        INFO(q->name);
        CHECK(fd::max_rel_err(q->value, q->grad, loss) < 1e-5);
    }
    CHECK(fd::max_rel_err(x, d_x, loss) < 1e-5);
}

TEST_CASE("label-smoothed loss: uniform, hand case, stationarity") {
    // eps = 0, uniform logits: ln V per row
    Tensor uniform({2, 4});
    CHECK(loss_label_smoothed(uniform, {0, 3}, 0.0) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-14));

    // V=2, eps=0.1, softmax(ln 9, ln 1) = (0.9, 0.1) with reference id 0
    Tensor hand({1, 2}, {std::log(9.0), std::log(1.0)});
    const double expect = -(0.9 * std::log(0.9) + 0.1 * std::log(0.1));
    CHECK(loss_label_smoothed(hand, {0}, 0.1) == doctest::Approx(expect).epsilon(1e-12));

    // gradient vanishes when the prediction equals the smoothed target
    Tensor opt({1, 2}, {std::log(0.9), std::log(0.1)});
    Tensor d(opt.shape());
    loss_label_smoothed(opt, {0}, 0.1, &d);
    for (std::size_t i = 0; i < d.numel(); ++i) CHECK(std::fabs(d[i]) < 1e-12);

    CHECK_THROWS_AS(loss_label_smoothed(hand, {5}, 0.1), Error);
}

TEST_CASE("frame error rate counting") {
    Tensor logits({4, 3}, {5, 0, 0, 0, 5, 0, 0, 0, 5, 5, 0, 0});
    CHECK(frame_error_rate(logits, {0, 1, 2, 0}) == 0.0);
    CHECK(frame_error_rate(logits, {1, 0, 1, 1}) == 1.0);
    CHECK(frame_error_rate(logits, {0, 1, 2, 1}) == 0.25);
}

TEST_CASE("perplexity: certain, uniform, geometric mean") {
    Tensor sure({2, 3}, {100, 0, 0, 0, 100, 0});
    CHECK(perplexity(sure, {0, 1}) == doctest::Approx(1.0).epsilon(1e-10));

    Tensor uniform({3, 4});
    CHECK(perplexity(uniform, {0, 1, 2}) == doctest::Approx(4.0).epsilon(1e-12));

    // reference probabilities 0.5 and 0.125 -> exp((ln2 + ln8)/2) = 4
    Tensor two({2, 2},
               {std::log(0.5), std::log(0.5), std::log(0.125), std::log(0.875)});
    CHECK(perplexity(two, {0, 0}) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("vocabulary file round trip") {
    Vocabulary v({"<bos>", "<eos>", "<pad>", "<unk>", "a", "b"});
    const char* path = "vocab_roundtrip_test.txt";
    v.save(path);
    Vocabulary loaded = Vocabulary::load(path);
    std::remove(path);
    CHECK(loaded.size() == 6);
    CHECK(loaded.id("a") == 4);
    CHECK(loaded.symbol(5) == "b");
    CHECK_THROWS_AS(loaded.id("zzz"), Error);
    CHECK_THROWS_AS(Vocabulary({"a", "b"}), Error);
}

TEST_CASE("dropout scales and masks deterministically") {
    ModelConfig cfg = small_config();
    SeededRng rng(17);
    Model m(cfg, rng);
    Tensor x = random_frames(8, 3, 18);

    SeededRng d1(99), d2(99);
    TeacherForced a = forward_teacher_forced(m, x, {2}, 0.3, &d1);
    TeacherForced b = forward_teacher_forced(m, x, {2}, 0.3, &d2);
    CHECK(std::memcmp(a.logits.data(), b.logits.data(), a.logits.numel() * sizeof(double)) == 0);

    TeacherForced clean = forward_teacher_forced(m, x, {2});
    bool differs = false;
    for (std::size_t i = 0; i < clean.logits.numel(); ++i)
        if (clean.logits[i] != a.logits[i]) differs = true;
    CHECK(differs);
}
