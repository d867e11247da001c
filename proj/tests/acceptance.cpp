// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// fail. Work files live under ./acceptance_work. The toy-task training run
// (criterion 4) is shared by the decoding and causality criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "grid2seq/decoder.hpp"
#include "grid2seq/trainer.hpp"
#include "support/scalar_grid_ref.hpp"

using namespace g2s;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s  %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

bool files_identical(const std::string& a, const std::string& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    if (!fa || !fb) return false;
    std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    return sa == sb;
}

// ---- criterion 1: gradient exactness ---------------------------------------

void criterion_grad_check() {
    const auto t0 = std::chrono::steady_clock::now();
    GradCheckConfig cfg; // the default small config: L=2 d=8, grid 8, V=5, e=8, T=12, N=3
    GradCheckReport rep = run_grad_check(cfg);
    const double secs = seconds_since(t0);
    const bool pass = rep.passed(1e-5) && secs < 120.0;
    report(1, pass,
           fmt("grad-check worst rel err %.3e over %zu tensors in %.1fs (limit 1e-5, 120s)",
               rep.worst, rep.entries.size(), secs));
}

// ---- criterion 2: grid oracle equivalence ----------------------------------

void criterion_grid_oracle() {
    // fixture shared with the independent scalar reference
    scalar_ref::CellWeights w{};
    const double wx[5] = {0.10, -0.20, 0.30, 0.25, -0.15};
    const double wh[5] = {0.05, 0.15, -0.10, 0.20, 0.10};
    const double wv[5] = {-0.05, 0.10, 0.20, -0.25, 0.05};
    const double wb[5] = {0.01, -0.02, 0.03, 0.04, -0.01};
    GridLstmParams p;
    p.input_dim = 1;
    p.hidden = 1;
    for (std::size_t k = 0; k < 5; ++k) {
        w.wx[k] = wx[k];
        w.wh[k] = wh[k];
        w.wv[k] = wv[k];
        w.b[k] = wb[k];
        p.w_in[k] = Parameter("w_in", Tensor({1, 1}, {wx[k]}));
        p.w_horiz[k] = Parameter("w_horiz", Tensor({1, 1}, {wh[k]}));
        p.w_vert[k] = Parameter("w_vert", Tensor({1, 1}, {wv[k]}));
        p.bias[k] = Parameter("bias", Tensor({1}, {wb[k]}));
    }
    Tensor inputs({2, 2, 1}, {0.5, -1.0, 1.5, 0.25});
    GridState g = forward_grid(inputs, p);
    scalar_ref::GridOut ref = scalar_ref::grid(w, {{0.5, -1.0}, {1.5, 0.25}});
    double worst = 0.0;
    for (std::size_t n = 1; n <= 2; ++n)
        for (std::size_t t = 1; t <= 2; ++t) {
            worst = std::max(worst, std::fabs(g.s_at(t, n)[0] - ref.s[n][t]));
            worst = std::max(worst, std::fabs(g.c_at(t, n)[0] - ref.c[n][t]));
        }

    // hand case: zero weights, neighbors 2 and 4, every gate at 1/2
    GridLstmParams zero;
    zero.input_dim = 1;
    zero.hidden = 1;
    for (std::size_t k = 0; k < 5; ++k) {
        zero.w_in[k] = Parameter("w_in", Tensor({1, 1}));
        zero.w_horiz[k] = Parameter("w_horiz", Tensor({1, 1}));
        zero.w_vert[k] = Parameter("w_vert", Tensor({1, 1}));
        zero.bias[k] = Parameter("bias", Tensor({1}));
    }
    Tensor x({1}), zs({1});
    Tensor cl({1}, {2.0}), ca({1}, {4.0});
    CellStep cell = cell_step(x, zs, cl, zs, ca, zero);
    const bool hand_ok = cell.c[0] == 1.5 && cell.s[0] == std::tanh(1.5) * 0.5;

    report(2, worst < 1e-12 && hand_ok,
           fmt("independent scalar oracle max |diff| %.2e; half-gate mix cell c=%.6g", worst,
               cell.c[0]));
}

// ---- criterion 8: metric oracles -------------------------------------------

struct BruteAlign {
    std::size_t cost, diag;
};
BruteAlign brute_align(const std::vector<std::size_t>& hyp, const std::vector<std::size_t>& ref,
                       std::size_t i, std::size_t j) {
    if (i == hyp.size() && j == ref.size()) return {0, 0};
    BruteAlign best = {std::size_t(-1), 0};
    auto consider = [&](BruteAlign c) {
        if (c.cost < best.cost || (c.cost == best.cost && c.diag > best.diag)) best = c;
    };
    if (i < hyp.size() && j < ref.size()) {
        BruteAlign c = brute_align(hyp, ref, i + 1, j + 1);
        consider({c.cost + (hyp[i] == ref[j] ? 0 : 1), c.diag + 1});
    }
    if (i < hyp.size()) {
        BruteAlign c = brute_align(hyp, ref, i + 1, j);
        consider({c.cost + 1, c.diag});
    }
    if (j < ref.size()) {
        BruteAlign c = brute_align(hyp, ref, i, j + 1);
        consider({c.cost + 1, c.diag});
    }
    return best;
}

void criterion_metrics() {
    // every sequence pair with lengths <= 4 over a 3-symbol alphabet
    std::vector<std::vector<std::size_t>> seqs = {{}};
    for (std::size_t len = 1; len <= 4; ++len) {
        const std::size_t start = seqs.size();
        for (std::size_t s = 0; s < start; ++s)
            if (seqs[s].size() == len - 1)
                for (std::size_t v = 0; v < 3; ++v) {
                    auto t = seqs[s];
                    t.push_back(v);
                    seqs.push_back(std::move(t));
                }
    }
    std::size_t checked = 0, mismatches = 0;
    for (const auto& hyp : seqs)
        for (const auto& ref : seqs) {
            EditCounts dp = edit_distance(hyp, ref);
            BruteAlign bf = brute_align(hyp, ref, 0, 0);
            ++checked;
            if (dp.distance != bf.cost || dp.ins != hyp.size() - bf.diag ||
                dp.dels != ref.size() - bf.diag || dp.subs + dp.ins + dp.dels != dp.distance)
                ++mismatches;
        }

    Tensor hand({1, 2}, {std::log(9.0), std::log(1.0)});
    const double expect = -(0.9 * std::log(0.9) + 0.1 * std::log(0.1));
    const double got = loss_label_smoothed(hand, {0}, 0.1);
    const bool loss_ok = std::fabs(got - expect) < 1e-12;

    report(8, mismatches == 0 && loss_ok,
           fmt("%zu alignment pairs vs brute force, %zu mismatches; smoothed-loss |err| %.2e",
               checked, mismatches, std::fabs(got - expect)));
}

// ---- criterion 4: toy-task convergence (shared training run) ----------------

struct ToyRun {
    TrainConfig cfg;
    Dataset train_set, dev_set;
    Vocabulary vocab;
    Model model;
    bool trained = false;
};

ToyRun g_toy;

void criterion_convergence(const std::string& work) {
    SyntheticTaskConfig task; // the documented defaults: vocab 20, F=8, 6-10 repeats, sigma 0.3
    task.seed = 42;
    g_toy.vocab = make_task_vocabulary(task.content_vocab_size);
    g_toy.train_set = generate_dataset(task, 2000, "train");
    g_toy.dev_set = generate_dataset(task, 200, "dev");

    TrainConfig cfg; // desk defaults: L=2 d=32 factors 2,4; grid 32; e=16; 30 epochs
    cfg.out_dir = work + "/toy_run";
    cfg.seed = 1;
    g_toy.cfg = cfg;

    const auto t0 = std::chrono::steady_clock::now();
    TrainResult result = train(cfg, g_toy.train_set, g_toy.dev_set, g_toy.vocab);
    const double train_secs = seconds_since(t0);

    g_toy.model = load_model(result.final_checkpoint);
    g_toy.trained = true;

    DevMetrics dev = evaluate_dev(g_toy.model, g_toy.dev_set);

    BeamConfig beam;
    beam.beam_size = 12;
    CorpusDecodeStats stats;
    std::vector<TranscriptEntry> hyp =
        decode_corpus(g_toy.model, g_toy.dev_set, g_toy.vocab, beam, &stats);
    MetricsReport wer = evaluate_transcripts(hyp, g_toy.dev_set, g_toy.vocab);

    const bool pass = cfg.max_epochs <= 30 && train_secs < 1200.0 && dev.ppl < 1.3 &&
                      dev.fer < 0.05 && wer.wer < 0.05;
    report(4, pass,
           fmt("%zu epochs in %.0fs: dev ppl %.4f (<1.3), FER %.4f (<0.05), beam-12 WER %.4f "
               "(<0.05)",
               cfg.max_epochs, train_secs, dev.ppl, dev.fer, wer.wer));
}

// ---- criterion 3: row-wise decoding equivalence ------------------------------

void criterion_rowwise(const std::string&) {
    if (!g_toy.trained) {
        report(3, false, "skipped: toy training unavailable");
        return;
    }
    const Model& m = g_toy.model;
    SeededRng rng(99);
    std::size_t checked = 0, bit_mismatch = 0, count_mismatch = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const Sample& s = g_toy.dev_set.samples[rng.uniform_int(g_toy.dev_set.size())];
        EncoderTrace enc = encode(s.frames, m.cfg.encoder, m.encoder);
        const std::size_t cols = enc.states.reduced_len();

        std::vector<std::size_t> prefix(1 + rng.uniform_int(8));
        for (auto& w : prefix)
            w = first_content_id() + rng.uniform_int(m.cfg.vocab_size - first_content_id());

        PrefixScore inc = score_prefix(m, enc.states, prefix, false);
        PrefixScore full = score_prefix(m, enc.states, prefix, true);
        ++checked;
        for (std::size_t r = 0; r < prefix.size(); ++r)
            if (std::memcmp(inc.step_log_probs[r].data(), full.step_log_probs[r].data(),
                            inc.step_log_probs[r].numel() * sizeof(double)) != 0)
                ++bit_mismatch;
        const std::size_t n = prefix.size();
        if (inc.cell_steps != n * cols || full.cell_steps != n * (n + 1) / 2 * cols)
            ++count_mismatch;
    }
    report(3, bit_mismatch == 0 && count_mismatch == 0,
           fmt("%zu prefixes: %zu score mismatches, %zu cell-count mismatches "
               "(incremental N*T', full-recompute N(N+1)/2*T')",
               checked, bit_mismatch, count_mismatch));
}

// ---- criterion 5: causality --------------------------------------------------

void criterion_causality() {
    if (!g_toy.trained) {
        report(5, false, "skipped: toy training unavailable");
        return;
    }
    const Model& m = g_toy.model;
    SeededRng rng(7);
    std::size_t checked = 0, violations = 0;
    for (std::size_t si = 0; si < 20; ++si) {
        const Sample& s = g_toy.dev_set.samples[si];
        TeacherForced base = forward_teacher_forced(m, s.frames, s.labels);
        const std::size_t n_labels = s.labels.size();
        for (std::size_t pos = 0; pos < n_labels; ++pos) {     // perturb w_{pos+1}
            std::vector<std::size_t> perturbed = s.labels;
            std::size_t alt = perturbed[pos];
            while (alt == perturbed[pos])
                alt = first_content_id() +
                      rng.uniform_int(m.cfg.vocab_size - first_content_id());
            perturbed[pos] = alt;
            TeacherForced out = forward_teacher_forced(m, s.frames, perturbed);
            // rows 1..pos+1 consume only w_1..w_pos: exact equality required
            for (std::size_t row = 0; row <= pos; ++row) {
                ++checked;
                if (std::memcmp(base.logits.row(row), out.logits.row(row),
                                m.cfg.vocab_size * sizeof(double)) != 0)
                    ++violations;
            }
        }
    }
    report(5, violations == 0,
           fmt("20 samples, %zu protected logit rows compared exactly, %zu violations", checked,
               violations));
}

// ---- criterion 6: beam properties --------------------------------------------

void criterion_beam() {
    if (!g_toy.trained) {
        report(6, false, "skipped: toy training unavailable");
        return;
    }
    const Model& m = g_toy.model;
    std::size_t greedy_mismatch = 0, monotone_violations = 0, revalidation_failures = 0;
    double worst_reval = 0.0;
    for (const Sample& s : g_toy.dev_set.samples) {
        BeamConfig b1;
        b1.beam_size = 1;
        DecodeResult beam1 = beam_search(m, s.frames, b1);
        DecodeResult greedy = greedy_decode(m, s.frames);
        if (beam1.labels != greedy.labels || beam1.truncated != greedy.truncated)
            ++greedy_mismatch;

        double prev = -1e300;
        for (std::size_t bs : {1u, 2u, 4u, 12u}) {
            BeamConfig cfg;
            cfg.beam_size = bs;
            DecodeResult r = beam_search(m, s.frames, cfg);
            if (r.truncated) continue; // only finished scores are comparable
            if (r.log_prob < prev) ++monotone_violations;
            prev = r.log_prob;

            // re-validate by teacher forcing
            TeacherForced out = forward_teacher_forced(m, s.frames, r.labels);
            const std::vector<std::size_t> refs = with_eos(r.labels);
            double lp = 0.0;
            for (std::size_t n = 0; n < refs.size(); ++n) {
                Tensor row({m.cfg.vocab_size});
                std::memcpy(row.data(), out.logits.row(n),
                            m.cfg.vocab_size * sizeof(double));
                lp += log_softmax(row)[refs[n]];
            }
            worst_reval = std::max(worst_reval, std::fabs(lp - r.log_prob));
            if (std::fabs(lp - r.log_prob) > 1e-10) ++revalidation_failures;
        }
    }
    report(6, greedy_mismatch == 0 && monotone_violations == 0 && revalidation_failures == 0,
           fmt("%zu dev samples: %zu greedy mismatches, %zu monotonicity violations, "
               "%zu re-validation failures (worst |err| %.2e)",
               g_toy.dev_set.size(), greedy_mismatch, monotone_violations,
               revalidation_failures, worst_reval));
}

// ---- criterion 7: determinism and persistence --------------------------------

void criterion_determinism(const std::string& work) {
    SyntheticTaskConfig task;
    task.content_vocab_size = 6;
    task.feature_dim = 4;
    task.repeats_min = 2;
    task.repeats_max = 4;
    task.label_len_min = 1;
    task.label_len_max = 4;
    task.seed = 11;
    Vocabulary vocab = make_task_vocabulary(task.content_vocab_size);
    Dataset train_set = generate_dataset(task, 32, "tr");
    Dataset dev_set = generate_dataset(task, 8, "dv");

    TrainConfig cfg;
    cfg.enc_layers = 2;
    cfg.enc_hidden = 6;
    cfg.enc_pool_factors = {2, 4};
    cfg.grid_hidden = 6;
    cfg.embed_dim = 4;
    cfg.seed = 3;
    cfg.batch_size = 8;
    cfg.max_epochs = 3;
    cfg.base_lr = 2e-3;
    cfg.warmup_steps = 4;
    cfg.dropout = 0.2;
    cfg.pretrain = {{0, 1, {8}}, {1, 2, {2, 4}}}; // grows mid-run, reduction 8 throughout

    cfg.out_dir = work + "/det_a";
    TrainResult a = train(cfg, train_set, dev_set, vocab);
    cfg.out_dir = work + "/det_b";
    TrainResult b = train(cfg, train_set, dev_set, vocab);
    const bool same_seed_identical = files_identical(a.final_checkpoint, b.final_checkpoint);

    // resume from the first checkpoint of run a and land on identical bits
    cfg.out_dir = work + "/det_a"; // same directory, fresh files past the resume point
    TrainResult resumed = train(cfg, train_set, dev_set, vocab, a.checkpoints[0].path);
    const bool resume_identical = files_identical(b.final_checkpoint, resumed.final_checkpoint);

    // growth preserved the reduction factor and the old weights
    SeededRng rng(5);
    ModelConfig mc;
    mc.feat_dim = 4;
    mc.vocab_size = vocab.size();
    mc.encoder.num_layers = 1;
    mc.encoder.hidden_per_direction = 6;
    mc.encoder.pool_factors = {8};
    mc.grid_hidden = 6;
    mc.embed_dim = 4;
    Model grown(mc, rng);
    Tensor before = grown.encoder.fwd[0].w_in[0].value;
    apply_pretrain_stage(grown, {1, 2, {2, 4}}, 3, 1);
    const bool growth_ok =
        grown.cfg.encoder.total_reduction() == 8 &&
        std::memcmp(before.data(), grown.encoder.fwd[0].w_in[0].value.data(),
                    before.numel() * sizeof(double)) == 0 &&
        grown.encoder.num_layers() == 2;

    report(7, same_seed_identical && resume_identical && growth_ok,
           fmt("same-seed checkpoints identical: %s; resume identical: %s; growth keeps "
               "reduction 8 and old weights: %s",
               same_seed_identical ? "yes" : "no", resume_identical ? "yes" : "no",
               growth_ok ? "yes" : "no"));
}

} // namespace

int main() {
    const std::string work = "acceptance_work";
    std::filesystem::remove_all(work);
    std::filesystem::create_directories(work);

    criterion_grad_check();
    criterion_grid_oracle();
    criterion_metrics();
    criterion_convergence(work);
    criterion_rowwise(work);
    criterion_causality();
    criterion_beam();
    criterion_determinism(work);

    if (g_failures == 0) {
        std::printf("acceptance: all criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criterion(s) failed\n", g_failures);
    return 1;
}
