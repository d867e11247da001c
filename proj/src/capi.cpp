#include "grid2seq.h"

#include <cstdlib>
#include <cstring>
#include <new>

#include "grid2seq/decoder.hpp"
#include "grid2seq/trainer.hpp"

using namespace g2s;

struct g2s_dataset {
    Dataset data;
    Vocabulary vocab;
};

struct g2s_model {
    Model model;
};

namespace {

thread_local std::string t_last_error;

g2s_status status_of(const Error& e) {
    switch (e.kind()) {
    case Error::kInvalid: return G2S_ERR_INVALID_ARGUMENT;
    case Error::kIo: return G2S_ERR_IO;
    case Error::kFormat: return G2S_ERR_FORMAT;
    case Error::kState: return G2S_ERR_STATE;
    case Error::kFail: return G2S_ERR_RUNTIME;
    }
    return G2S_ERR_RUNTIME;
}

template <typename Fn>
g2s_status guarded(Fn&& fn) {
    try {
        t_last_error.clear();
        fn();
        return G2S_OK;
    } catch (const Error& e) {
        t_last_error = e.what();
        return status_of(e);
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return G2S_ERR_RUNTIME;
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void require_arg(bool ok, const char* what) {
    if (!ok) fail_invalid(std::string("null argument: ") + what);
}

} // namespace

extern "C" {

const char* g2s_status_name(g2s_status status) {
    switch (status) {
    case G2S_OK: return "ok";
    case G2S_ERR_INVALID_ARGUMENT: return "invalid argument";
    case G2S_ERR_IO: return "i/o error";
    case G2S_ERR_FORMAT: return "format error";
    case G2S_ERR_STATE: return "state error";
    case G2S_ERR_RUNTIME: return "runtime error";
    }
    return "unknown";
}

const char* g2s_last_error(void) { return t_last_error.c_str(); }

void g2s_string_free(char* s) { std::free(s); }

void g2s_task_options_init(g2s_task_options* opts) {
    if (!opts) return;
    SyntheticTaskConfig d;
    opts->seed = d.seed;
    opts->content_vocab_size = uint32_t(d.content_vocab_size);
    opts->feature_dim = uint32_t(d.feature_dim);
    opts->repeats_min = uint32_t(d.repeats_min);
    opts->repeats_max = uint32_t(d.repeats_max);
    opts->label_len_min = uint32_t(d.label_len_min);
    opts->label_len_max = uint32_t(d.label_len_max);
    opts->noise_sigma = d.noise_sigma;
}

g2s_status g2s_generate(const g2s_task_options* opts, uint64_t n_samples, const char* id_prefix,
                        g2s_dataset** out) {
    return guarded([&] {
        require_arg(opts && out, "opts/out");
        SyntheticTaskConfig cfg;
        cfg.seed = opts->seed;
        cfg.content_vocab_size = opts->content_vocab_size;
        cfg.feature_dim = opts->feature_dim;
        cfg.repeats_min = opts->repeats_min;
        cfg.repeats_max = opts->repeats_max;
        cfg.label_len_min = opts->label_len_min;
        cfg.label_len_max = opts->label_len_max;
        cfg.noise_sigma = opts->noise_sigma;
        auto handle = std::make_unique<g2s_dataset>();
        handle->vocab = make_task_vocabulary(cfg.content_vocab_size);
        handle->data = generate_dataset(cfg, n_samples, id_prefix ? id_prefix : "sample");
        *out = handle.release();
    });
}

g2s_status g2s_dataset_load(const char* dataset_path, const char* vocab_path, g2s_dataset** out) {
    return guarded([&] {
        require_arg(dataset_path && vocab_path && out, "paths/out");
        auto handle = std::make_unique<g2s_dataset>();
        handle->vocab = Vocabulary::load(vocab_path);
        handle->data = load_dataset(dataset_path, handle->vocab);
        *out = handle.release();
    });
}

g2s_status g2s_dataset_save(const g2s_dataset* dataset, const char* path) {
    return guarded([&] {
        require_arg(dataset && path, "dataset/path");
        save_dataset(dataset->data, dataset->vocab, path);
    });
}

g2s_status g2s_vocab_save(const g2s_dataset* dataset, const char* path) {
    return guarded([&] {
        require_arg(dataset && path, "dataset/path");
        dataset->vocab.save(path);
    });
}

uint64_t g2s_dataset_size(const g2s_dataset* dataset) {
    return dataset ? dataset->data.size() : 0;
}

void g2s_dataset_free(g2s_dataset* dataset) { delete dataset; }

g2s_status g2s_train(const char* config_path, const char* resume_checkpoint,
                     char** final_checkpoint_out) {
    return guarded([&] {
        require_arg(config_path, "config_path");
        TrainConfig cfg = TrainConfig::from_file(config_path);
        TrainResult result = run_training(cfg, resume_checkpoint ? resume_checkpoint : "");
        if (final_checkpoint_out) *final_checkpoint_out = dup_string(result.final_checkpoint);
    });
}

g2s_status g2s_grad_check(const char* config_path, double tolerance, int* passed,
                          char** report_out) {
    return guarded([&] {
        GradCheckConfig cfg;
        if (config_path) {
            TrainConfig tc = TrainConfig::from_file(config_path);
            cfg.model.encoder.num_layers = tc.enc_layers;
            cfg.model.encoder.hidden_per_direction = tc.enc_hidden;
            cfg.model.encoder.pool_factors = tc.enc_pool_factors;
            cfg.model.grid_hidden = tc.grid_hidden;
            cfg.model.embed_dim = tc.embed_dim;
            cfg.label_smoothing = tc.label_smoothing;
            cfg.seed = tc.seed;
        }
        GradCheckReport report = run_grad_check(cfg);
        if (passed) *passed = report.passed(tolerance) ? 1 : 0;
        if (report_out) *report_out = dup_string(report.text(tolerance));
    });
}

g2s_status g2s_model_load(const char* checkpoint_path, g2s_model** out) {
    return guarded([&] {
        require_arg(checkpoint_path && out, "checkpoint_path/out");
        auto handle = std::make_unique<g2s_model>();
        handle->model = load_model(checkpoint_path);
        *out = handle.release();
    });
}

void g2s_model_free(g2s_model* model) { delete model; }

uint64_t g2s_model_num_params(const g2s_model* model) {
    return model ? model->model.num_params() : 0;
}

void g2s_decode_options_init(g2s_decode_options* opts) {
    if (!opts) return;
    BeamConfig d;
    opts->beam_size = uint32_t(d.beam_size);
    opts->max_rows = uint32_t(d.max_rows);
    opts->length_norm = d.length_norm ? 1 : 0;
    opts->full_recompute = d.full_recompute ? 1 : 0;
}

g2s_status g2s_decode(const g2s_model* model, const g2s_dataset* data,
                      const g2s_decode_options* opts, const char* transcript_path,
                      g2s_decode_stats* stats) {
    return guarded([&] {
        require_arg(model && data && transcript_path, "model/data/transcript_path");
        BeamConfig cfg;
        if (opts) {
            cfg.beam_size = opts->beam_size;
            cfg.max_rows = opts->max_rows;
            cfg.length_norm = opts->length_norm != 0;
            cfg.full_recompute = opts->full_recompute != 0;
        }
        CorpusDecodeStats s;
        std::vector<TranscriptEntry> entries =
            decode_corpus(model->model, data->data, data->vocab, cfg, &s);
        save_transcripts(entries, transcript_path);
        if (stats) {
            stats->wall_seconds = s.wall_seconds;
            stats->cell_steps = s.cell_steps;
            stats->samples = s.samples;
            stats->truncated = s.truncated;
        }
    });
}

g2s_status g2s_evaluate(const char* const* transcript_paths, size_t n_runs,
                        const char* ref_dataset_path, const char* vocab_path,
                        g2s_eval_report* out) {
    return guarded([&] {
        require_arg(transcript_paths && ref_dataset_path && vocab_path && out, "paths/out");
        if (n_runs == 0) fail_invalid("evaluate: need at least one transcript file");
        Vocabulary vocab = Vocabulary::load(vocab_path);
        Dataset refs = load_dataset(ref_dataset_path, vocab);
        std::vector<std::vector<TranscriptEntry>> runs;
        for (size_t i = 0; i < n_runs; ++i) runs.push_back(load_transcripts(transcript_paths[i]));
        MetricsReport rep = evaluate_runs(runs, refs, vocab);
        out->wer = rep.wer;
        out->substitutions = rep.subs;
        out->insertions = rep.ins;
        out->deletions = rep.dels;
        out->ref_labels = rep.ref_labels;
        out->samples = rep.samples;
    });
}

} // extern "C"
