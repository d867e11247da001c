#pragma once

#include "grid2seq/adam.hpp"
#include "grid2seq/checkpoint.hpp"
#include "grid2seq/config.hpp"
#include "grid2seq/data.hpp"
#include "grid2seq/metrics.hpp"
#include "grid2seq/model.hpp"

namespace g2s {

/// How often the decay fired over a history of checkpoint dev perplexities:
/// each time `patience` consecutive checkpoints fail to improve on the best
/// seen so far, one decay is counted and the streak resets.
std::size_t newbob_decay_count(const std::vector<double>& dev_ppls, std::size_t patience);

/// One dev evaluation in the checkpoint history.
struct PplPoint {
    std::uint64_t step = 0;
    double ppl = 0.0;
};

/// Linear warmup to base_lr; after warmup completes, newbob decay driven by
/// the dev perplexities of post-warmup checkpoints (earlier checkpoints are
/// logged but never trigger decay).
double lr_schedule(std::uint64_t step, const std::vector<PplPoint>& history,
                   const TrainConfig& cfg);

/// Grows the encoder to the stage's layer count (new layers freshly
/// initialized from a stage-keyed stream, existing layers untouched) and
/// reassigns pool factors. The total reduction factor must not change.
void apply_pretrain_stage(Model& model, const PretrainStage& stage, std::uint64_t seed,
                          std::size_t stage_index);

struct CheckpointInfo {
    std::string path;
    std::uint64_t step = 0;
    double train_loss = 0.0;
    double dev_ppl = 0.0;
    double dev_fer = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    std::vector<CheckpointInfo> checkpoints;
    std::string final_checkpoint;
    std::string metrics_path;
};

/// Corpus-level teacher-forced metrics (no dropout): perplexity is
/// exp(total nll / total rows), fer the fraction of mispredicted rows.
struct DevMetrics {
    double ppl = 0.0;
    double fer = 0.0;
};
DevMetrics evaluate_dev(const Model& model, const Dataset& dev_set, std::size_t max_samples = 0);

/// Deterministic end-to-end training. Same seed, same data: bit-identical
/// checkpoints. resume_from continues a run saved by this function.
TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& dev_set,
                  const Vocabulary& vocab, const std::string& resume_from = "");

/// Loads datasets and vocabulary from the config paths, then trains.
TrainResult run_training(const TrainConfig& cfg, const std::string& resume_from = "");

/// Rebuilds a model from a checkpoint (architecture from the state records,
/// weights from the parameter records).
Model model_from_checkpoint(const CheckpointData& ck);
Model load_model(const std::string& checkpoint_path);

// ---- gradient checking ------------------------------------------------------

struct GradCheckConfig {
    ModelConfig model; // defaults below keep the parameter count tiny
    std::size_t frames = 12;
    std::size_t n_labels = 3;
    std::size_t batch = 2;
    double h = 1e-5;
    double label_smoothing = 0.1;
    std::uint64_t seed = 1234;
    std::size_t max_params = 20000;

    GradCheckConfig();
};

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double worst = 0.0;
    bool passed(double tolerance) const { return worst < tolerance; }
    std::string text(double tolerance) const;
};

/// Mean teacher-forced loss over a batch, dropout off.
double batch_loss(const Model& model, const std::vector<Sample>& batch, double smoothing);

/// Accumulates d(batch_loss)/d(params) into the model's grads (call
/// zero_grads first).
void accumulate_batch_gradients(Model& model, const std::vector<Sample>& batch, double smoothing);

/// Central-difference comparison of whatever is currently in the grads.
GradCheckReport compare_grads_fd(Model& model, const std::vector<Sample>& batch,
                                 double smoothing, double h);

std::vector<Sample> make_grad_check_batch(const GradCheckConfig& cfg);
GradCheckReport run_grad_check(const GradCheckConfig& cfg);

} // namespace g2s
