#include "grid2seq/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace g2s {

namespace {

constexpr std::uint64_t kInitStream = 0x11A17ull;
constexpr std::uint64_t kShuffleStream = 0x5FF1Eull;
constexpr std::uint64_t kDropoutStream = 0xD0D0ull;
constexpr std::uint64_t kGrowStream = 0x640Full;

std::vector<PretrainStage> effective_stages(const TrainConfig& cfg) {
    if (!cfg.pretrain.empty()) return cfg.pretrain;
    PretrainStage full;
    full.start_epoch = 0;
    full.layers = cfg.enc_layers;
    full.pool_factors = cfg.enc_pool_factors;
    return {full};
}

ModelConfig model_config_for_stage(const TrainConfig& cfg, const PretrainStage& stage,
                                   std::size_t feat_dim, std::size_t vocab_size) {
    ModelConfig mc;
    mc.feat_dim = feat_dim;
    mc.vocab_size = vocab_size;
    mc.encoder.num_layers = stage.layers;
    mc.encoder.hidden_per_direction = cfg.enc_hidden;
    mc.encoder.pool_factors = stage.pool_factors;
    mc.grid_hidden = cfg.grid_hidden;
    mc.embed_dim = cfg.embed_dim;
    return mc;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    SeededRng rng(SeededRng::mix3(seed, kShuffleStream, epoch));
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.uniform_int(i);
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

double format_safe(double v) { return std::isfinite(v) ? v : 0.0; }

} // namespace

std::size_t newbob_decay_count(const std::vector<double>& dev_ppls, std::size_t patience) {
    if (patience == 0) patience = 1;
    std::size_t decays = 0, streak = 0;
    double best = std::numeric_limits<double>::infinity();
    for (double ppl : dev_ppls) {
        if (ppl < best) {
            best = ppl;
            streak = 0;
        } else {
            ++streak;
            if (streak >= patience) {
                ++decays;
                streak = 0;
            }
        }
    }
    return decays;
}

double lr_schedule(std::uint64_t step, const std::vector<PplPoint>& history,
                   const TrainConfig& cfg) {
    double warm = 1.0;
    if (cfg.warmup_steps > 0)
        warm = std::min(1.0, double(step) / double(cfg.warmup_steps));
    std::vector<double> post_warmup;
    for (const PplPoint& p : history)
        if (p.step >= cfg.warmup_steps) post_warmup.push_back(p.ppl);
    const std::size_t decays = newbob_decay_count(post_warmup, cfg.newbob_patience);
    return cfg.base_lr * warm * std::pow(cfg.newbob_factor, double(decays));
}

void apply_pretrain_stage(Model& model, const PretrainStage& stage, std::uint64_t seed,
                          std::size_t stage_index) {
    const std::size_t cur = model.cfg.encoder.num_layers;
    if (stage.layers < cur)
        fail_invalid("pretrain: stage would shrink the encoder from " + std::to_string(cur) +
                     " to " + std::to_string(stage.layers) + " layers");
    std::size_t old_prod = 1, new_prod = 1;
    for (std::size_t f : model.cfg.encoder.pool_factors) old_prod *= f;
    for (std::size_t f : stage.pool_factors) new_prod *= f;
    if (old_prod != new_prod || stage.pool_factors.size() != stage.layers)
        fail_invalid("pretrain: stage must preserve the total reduction factor");

    const std::size_t d = model.cfg.encoder.hidden_per_direction;
    SeededRng rng(SeededRng::mix3(seed, kGrowStream, stage_index));
    for (std::size_t l = cur; l < stage.layers; ++l) {
        const std::string base = "enc.l" + std::to_string(l);
        model.encoder.fwd.emplace_back(2 * d, d, rng, base + ".fwd");
        model.encoder.bwd.emplace_back(2 * d, d, rng, base + ".bwd");
    }
    model.cfg.encoder.num_layers = stage.layers;
    model.cfg.encoder.pool_factors = stage.pool_factors;
}

DevMetrics evaluate_dev(const Model& model, const Dataset& dev_set, std::size_t max_samples) {
    double nll = 0.0;
    std::size_t rows = 0, wrong = 0;
    const std::size_t n =
        max_samples == 0 ? dev_set.size() : std::min(max_samples, dev_set.size());
    for (std::size_t i = 0; i < n; ++i) {
        const Sample& s = dev_set.samples[i];
        TeacherForced out = forward_teacher_forced(model, s.frames, s.labels);
        const std::vector<std::size_t> refs = with_eos(s.labels);
        const std::size_t v = out.logits.extent(1);
        for (std::size_t r = 0; r < refs.size(); ++r) {
            Tensor row({v});
            std::copy(out.logits.row(r), out.logits.row(r) + v, row.data());
            Tensor lsm = log_softmax(row);
            nll -= lsm[refs[r]];
            std::size_t best = 0;
            for (std::size_t j = 1; j < v; ++j)
                if (row[j] > row[best]) best = j;
            if (best != refs[r]) ++wrong;
        }
        rows += refs.size();
    }
    DevMetrics m;
    m.ppl = rows ? std::exp(nll / double(rows)) : 1.0;
    m.fer = rows ? double(wrong) / double(rows) : 0.0;
    return m;
}

namespace {

struct TrainLoopState {
    std::size_t epoch = 0;
    std::size_t next_step_in_epoch = 0;
    std::size_t stage_idx = 0;
    std::uint64_t global_step = 0;
    std::uint64_t last_ckpt_step = 0;
    std::vector<PplPoint> ppl_history;
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
};

CheckpointData build_checkpoint(Model& model, const AdamState& adam, const TrainConfig& cfg,
                                const TrainLoopState& st, const DevMetrics& dev) {
    CheckpointData ck;
    ck.config_hash = cfg.hash();
    ck.step = st.global_step;
    for (Parameter* p : model.parameters()) ck.records.emplace_back(p->name, p->value);
    for (Parameter* p : model.parameters()) {
        ck.records.emplace_back("adam.m." + p->name, adam.m.at(p->name));
        ck.records.emplace_back("adam.v." + p->name, adam.v.at(p->name));
    }
    ck.records.emplace_back(
        "state.model_dims",
        Tensor({6}, {double(model.cfg.feat_dim), double(model.cfg.vocab_size),
                     double(model.cfg.encoder.num_layers),
                     double(model.cfg.encoder.hidden_per_direction),
                     double(model.cfg.grid_hidden), double(model.cfg.embed_dim)}));
    {
        Tensor fac({model.cfg.encoder.pool_factors.size()});
        for (std::size_t i = 0; i < fac.numel(); ++i)
            fac[i] = double(model.cfg.encoder.pool_factors[i]);
        ck.records.emplace_back("state.enc_pool_factors", std::move(fac));
    }
    ck.records.emplace_back("state.progress",
                            Tensor({5}, {double(st.epoch), double(st.next_step_in_epoch),
                                         double(st.stage_idx), format_safe(dev.ppl),
                                         format_safe(dev.fer)}));
    {
        Tensor hist({std::max<std::size_t>(1, st.ppl_history.size()), 2});
        for (std::size_t i = 0; i < st.ppl_history.size(); ++i) {
            hist.at2(i, 0) = double(st.ppl_history[i].step);
            hist.at2(i, 1) = st.ppl_history[i].ppl;
        }
        ck.records.emplace_back("state.ppl_history_len",
                                Tensor({1}, {double(st.ppl_history.size())}));
        ck.records.emplace_back("state.ppl_history", std::move(hist));
    }
    return ck;
}

} // namespace

Model model_from_checkpoint(const CheckpointData& ck) {
    const Tensor& dims = ck.require("state.model_dims");
    const Tensor& factors = ck.require("state.enc_pool_factors");
    ModelConfig mc;
    mc.feat_dim = std::size_t(dims[0]);
    mc.vocab_size = std::size_t(dims[1]);
    mc.encoder.num_layers = std::size_t(dims[2]);
    mc.encoder.hidden_per_direction = std::size_t(dims[3]);
    mc.grid_hidden = std::size_t(dims[4]);
    mc.embed_dim = std::size_t(dims[5]);
    mc.encoder.pool_factors.clear();
    for (std::size_t i = 0; i < factors.numel(); ++i)
        mc.encoder.pool_factors.push_back(std::size_t(factors[i]));

    SeededRng rng(0); // placeholder values, overwritten below
    Model model(mc, rng);
    for (Parameter* p : model.parameters()) {
        const Tensor& rec = ck.require(p->name);
        if (!rec.same_shape(p->value))
            fail_format("checkpoint: shape mismatch for " + p->name + ": " + rec.shape_str() +
                        " vs " + p->value.shape_str());
        p->value = rec;
    }
    return model;
}

Model load_model(const std::string& checkpoint_path) {
    return model_from_checkpoint(read_checkpoint(checkpoint_path));
}

TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& dev_set,
                  const Vocabulary& vocab, const std::string& resume_from) {
    cfg.validate();
    if (train_set.size() == 0 || dev_set.size() == 0)
        fail_invalid("train: datasets must be non-empty");
    if (cfg.out_dir.empty()) fail_invalid("train: out_dir not set");
    std::filesystem::create_directories(cfg.out_dir);

    const std::size_t feat_dim = train_set.feature_dim();
    const std::size_t vocab_size = vocab.size();
    const std::vector<PretrainStage> stages = effective_stages(cfg);

    TrainLoopState st;
    SeededRng init_rng = SeededRng(cfg.seed).derive(kInitStream);
    Model model(model_config_for_stage(cfg, stages[0], feat_dim, vocab_size), init_rng);
    AdamState adam;
    AdamConfig adam_cfg;
    adam_cfg.clip_norm = cfg.grad_clip;

    if (!resume_from.empty()) {
        CheckpointData ck = read_checkpoint(resume_from);
        if (ck.config_hash != cfg.hash())
            throw Error(Error::kState, "resume: checkpoint was written with a different config");
        const Tensor& progress = ck.require("state.progress");
        st.epoch = std::size_t(progress[0]);
        st.next_step_in_epoch = std::size_t(progress[1]);
        st.stage_idx = std::size_t(progress[2]);
        st.global_step = ck.step;
        st.last_ckpt_step = ck.step;
        const std::size_t hist_len = std::size_t(ck.require("state.ppl_history_len")[0]);
        const Tensor& hist = ck.require("state.ppl_history");
        for (std::size_t i = 0; i < hist_len; ++i)
            st.ppl_history.push_back({std::uint64_t(hist.at2(i, 0)), hist.at2(i, 1)});

        model = model_from_checkpoint(ck);
        adam.step = ck.step;
        for (Parameter* p : model.parameters()) {
            adam.m[p->name] = ck.require("adam.m." + p->name);
            adam.v[p->name] = ck.require("adam.v." + p->name);
        }
    }
    adam.ensure(model.parameters());

    const std::size_t n_train = train_set.size();
    const std::size_t steps_per_epoch = (n_train + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t ckpt_every =
        cfg.checkpoint_every > 0 ? cfg.checkpoint_every : std::max<std::size_t>(1, steps_per_epoch / 2);

    const std::string metrics_path = cfg.out_dir + "/metrics.tsv";
    std::ofstream metrics(metrics_path, resume_from.empty() ? std::ios::trunc : std::ios::app);
    if (!metrics) fail_io("cannot write metric log: " + metrics_path);

    TrainResult result;
    result.metrics_path = metrics_path;

    auto do_checkpoint = [&]() {
        DevMetrics dev = evaluate_dev(model, dev_set);
        st.ppl_history.push_back({st.global_step, dev.ppl});
        const double lr_now = lr_schedule(st.global_step, st.ppl_history, cfg);
        const double train_loss = st.loss_count ? st.loss_sum / double(st.loss_count) : 0.0;

        char path[512];
        std::snprintf(path, sizeof path, "%s/ckpt-%08llu.g2s", cfg.out_dir.c_str(),
                      static_cast<unsigned long long>(st.global_step));
        CheckpointData ck = build_checkpoint(model, adam, cfg, st, dev);
        write_checkpoint(path, ck);

        char line[256];
        std::snprintf(line, sizeof line, "%llu\t%.10g\t%.10g\t%.10g\t%.10g\n",
                      static_cast<unsigned long long>(st.global_step), train_loss, dev.ppl,
                      dev.fer, lr_now);
        metrics << line;
        metrics.flush();

        result.checkpoints.push_back({path, st.global_step, train_loss, dev.ppl, dev.fer, lr_now});
        st.loss_sum = 0.0;
        st.loss_count = 0;
        st.last_ckpt_step = st.global_step;
    };

    std::vector<Parameter*> params = model.parameters();
    const std::uint64_t dropout_seed = SeededRng::mix2(cfg.seed, kDropoutStream);

    for (; st.epoch < cfg.max_epochs; ++st.epoch, st.next_step_in_epoch = 0) {
        while (st.stage_idx + 1 < stages.size() &&
               stages[st.stage_idx + 1].start_epoch <= st.epoch) {
            ++st.stage_idx;
            apply_pretrain_stage(model, stages[st.stage_idx], cfg.seed, st.stage_idx);
            adam.ensure(model.parameters());
            params = model.parameters();
        }

        const std::vector<std::size_t> order = epoch_order(n_train, cfg.seed, st.epoch);
        for (; st.next_step_in_epoch < steps_per_epoch;) {
            const std::size_t lo = st.next_step_in_epoch * cfg.batch_size;
            const std::size_t hi = std::min(n_train, lo + cfg.batch_size);
            const std::size_t bn = hi - lo;

            model.zero_grads();
            double loss_acc = 0.0;
            for (std::size_t b = 0; b < bn; ++b) {
                const Sample& s = train_set.samples[order[lo + b]];
                SeededRng drop_rng(SeededRng::mix3(dropout_seed, st.global_step, b));
                TeacherForced fwd = forward_teacher_forced(model, s.frames, s.labels,
                                                           cfg.dropout, &drop_rng);
                const std::vector<std::size_t> refs = with_eos(s.labels);
                Tensor d_logits(fwd.logits.shape());
                loss_acc +=
                    loss_label_smoothed(fwd.logits, refs, cfg.label_smoothing, &d_logits);
                for (std::size_t i = 0; i < d_logits.numel(); ++i) d_logits[i] /= double(bn);
                backward_teacher_forced(model, fwd, d_logits);
            }
            const double batch_loss_val = loss_acc / double(bn);
            if (!std::isfinite(batch_loss_val))
                throw Error(Error::kFail, "training diverged: non-finite loss at step " +
                                              std::to_string(st.global_step));

            const double lr = lr_schedule(st.global_step, st.ppl_history, cfg);
            adam_step(params, adam, adam_cfg, lr);
            ++st.global_step;
            st.loss_sum += batch_loss_val;
            st.loss_count += 1;
            ++st.next_step_in_epoch;

            if (st.global_step - st.last_ckpt_step >= ckpt_every) do_checkpoint();
        }
    }

    if (st.global_step > st.last_ckpt_step || result.checkpoints.empty()) do_checkpoint();

    // stable name for the final state
    const std::string final_path = cfg.out_dir + "/ckpt-final.g2s";
    std::filesystem::copy_file(result.checkpoints.back().path, final_path,
                               std::filesystem::copy_options::overwrite_existing);
    result.final_checkpoint = final_path;
    return result;
}

TrainResult run_training(const TrainConfig& cfg, const std::string& resume_from) {
    if (cfg.train_data.empty() || cfg.dev_data.empty() || cfg.vocab.empty())
        fail_invalid("train: train_data, dev_data and vocab paths are required");
    Vocabulary vocab = Vocabulary::load(cfg.vocab);
    Dataset train_set = load_dataset(cfg.train_data, vocab);
    Dataset dev_set = load_dataset(cfg.dev_data, vocab);
    return train(cfg, train_set, dev_set, vocab, resume_from);
}

// ---- gradient checking ------------------------------------------------------

GradCheckConfig::GradCheckConfig() {
    model.feat_dim = 8;
    model.vocab_size = 5;
    model.encoder.num_layers = 2;
    model.encoder.hidden_per_direction = 8;
    model.encoder.pool_factors = {2, 2};
    model.grid_hidden = 8;
    model.embed_dim = 8;
}

std::string GradCheckReport::text(double tolerance) const {
    std::string out;
    char line[256];
    for (const GradCheckEntry& e : entries) {
        std::snprintf(line, sizeof line, "%-24s max_rel_err=%.3e %s\n", e.name.c_str(),
                      e.max_rel_err, e.max_rel_err < tolerance ? "ok" : "FAIL");
        out += line;
    }
    std::snprintf(line, sizeof line, "worst %.3e (%s at tolerance %.1e)\n", worst,
                  passed(tolerance) ? "pass" : "fail", tolerance);
    out += line;
    return out;
}

double batch_loss(const Model& model, const std::vector<Sample>& batch, double smoothing) {
    double total = 0.0;
    for (const Sample& s : batch) {
        TeacherForced fwd = forward_teacher_forced(model, s.frames, s.labels);
        total += loss_label_smoothed(fwd.logits, with_eos(s.labels), smoothing);
    }
    return total / double(batch.size());
}

void accumulate_batch_gradients(Model& model, const std::vector<Sample>& batch,
                                double smoothing) {
    for (const Sample& s : batch) {
        TeacherForced fwd = forward_teacher_forced(model, s.frames, s.labels);
        Tensor d_logits(fwd.logits.shape());
        loss_label_smoothed(fwd.logits, with_eos(s.labels), smoothing, &d_logits);
        for (std::size_t i = 0; i < d_logits.numel(); ++i) d_logits[i] /= double(batch.size());
        backward_teacher_forced(model, fwd, d_logits);
    }
}

GradCheckReport compare_grads_fd(Model& model, const std::vector<Sample>& batch,
                                 double smoothing, double h) {
    GradCheckReport report;
    for (Parameter* p : model.parameters()) {
        double worst = 0.0;
        for (std::size_t i = 0; i < p->value.numel(); ++i) {
            const double orig = p->value[i];
            p->value[i] = orig + h;
            const double up = batch_loss(model, batch, smoothing);
            p->value[i] = orig - h;
            const double down = batch_loss(model, batch, smoothing);
            p->value[i] = orig;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = p->grad[i];
            const double scale =
                std::max(1.0, std::max(std::fabs(analytic), std::fabs(numeric)));
            worst = std::max(worst, std::fabs(analytic - numeric) / scale);
        }
        report.entries.push_back({p->name, worst});
        report.worst = std::max(report.worst, worst);
    }
    return report;
}

std::vector<Sample> make_grad_check_batch(const GradCheckConfig& cfg) {
    std::vector<Sample> batch;
    SeededRng rng(SeededRng::mix2(cfg.seed, 0xBA7C4ull));
    for (std::size_t b = 0; b < cfg.batch; ++b) {
        Sample s;
        s.id = "gc-" + std::to_string(b);
        s.frames = Tensor({cfg.frames, cfg.model.feat_dim});
        for (std::size_t i = 0; i < s.frames.numel(); ++i) s.frames[i] = rng.uniform(-1, 1);
        for (std::size_t i = 0; i < cfg.n_labels; ++i)
            s.labels.push_back(2 + rng.uniform_int(cfg.model.vocab_size - 2));
        batch.push_back(std::move(s));
    }
    return batch;
}

GradCheckReport run_grad_check(const GradCheckConfig& cfg) {
    SeededRng rng(SeededRng::mix2(cfg.seed, 0x64ADull));
    Model model(cfg.model, rng);
    const std::size_t n_params = model.num_params();
    if (n_params >= cfg.max_params)
        fail_invalid("grad check: " + std::to_string(n_params) +
                     " parameters exceed the small-model bound " +
                     std::to_string(cfg.max_params));
    std::vector<Sample> batch = make_grad_check_batch(cfg);
    model.zero_grads();
    accumulate_batch_gradients(model, batch, cfg.label_smoothing);
    return compare_grads_fd(model, batch, cfg.label_smoothing, cfg.h);
}

} // namespace g2s
