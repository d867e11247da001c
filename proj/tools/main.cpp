// Command-line front end. Talks to the core exclusively through the C API in
// grid2seq.h.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grid2seq.h"

namespace {

int fail(g2s_status status) {
    std::fprintf(stderr, "error: %s (%s)\n", g2s_last_error(), g2s_status_name(status));
    return 1;
}

struct DatasetGuard {
    g2s_dataset* ptr = nullptr;
    ~DatasetGuard() { g2s_dataset_free(ptr); }
};

struct ModelGuard {
    g2s_model* ptr = nullptr;
    ~ModelGuard() { g2s_model_free(ptr); }
};

std::string default_vocab_path(const std::string& data_path) {
    return (std::filesystem::path(data_path).parent_path() / "vocab.txt").string();
}

int cmd_gen_data(const g2s_task_options& opts, std::uint64_t n_train, std::uint64_t n_dev,
                 const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);

    DatasetGuard train;
    g2s_status st = g2s_generate(&opts, n_train, "train", &train.ptr);
    if (st != G2S_OK) return fail(st);

    DatasetGuard dev;
    st = g2s_generate(&opts, n_dev, "dev", &dev.ptr); // same task, disjoint split stream
    if (st != G2S_OK) return fail(st);

    const std::string train_path = out_dir + "/train.txt";
    const std::string dev_path = out_dir + "/dev.txt";
    const std::string vocab_path = out_dir + "/vocab.txt";
    if ((st = g2s_dataset_save(train.ptr, train_path.c_str())) != G2S_OK) return fail(st);
    if ((st = g2s_dataset_save(dev.ptr, dev_path.c_str())) != G2S_OK) return fail(st);
    if ((st = g2s_vocab_save(train.ptr, vocab_path.c_str())) != G2S_OK) return fail(st);

    std::printf("wrote %" PRIu64 " train / %" PRIu64 " dev samples under %s\n",
                g2s_dataset_size(train.ptr), g2s_dataset_size(dev.ptr), out_dir.c_str());
    return 0;
}

int cmd_train(const std::string& config, const std::string& resume) {
    char* final_path = nullptr;
    g2s_status st = g2s_train(config.c_str(), resume.empty() ? nullptr : resume.c_str(),
                              &final_path);
    if (st != G2S_OK) return fail(st);
    std::printf("training done, final checkpoint: %s\n", final_path);
    g2s_string_free(final_path);
    return 0;
}

int cmd_decode(const std::string& checkpoint, const std::string& data, std::string vocab,
               const std::string& out, const g2s_decode_options& opts, bool count_cells) {
    if (vocab.empty()) vocab = default_vocab_path(data);

    ModelGuard model;
    g2s_status st = g2s_model_load(checkpoint.c_str(), &model.ptr);
    if (st != G2S_OK) return fail(st);

    DatasetGuard dataset;
    if ((st = g2s_dataset_load(data.c_str(), vocab.c_str(), &dataset.ptr)) != G2S_OK)
        return fail(st);

    g2s_decode_stats stats;
    if ((st = g2s_decode(model.ptr, dataset.ptr, &opts, out.c_str(), &stats)) != G2S_OK)
        return fail(st);

    std::printf("decoded %" PRIu64 " samples in %.2fs (%" PRIu64 " truncated) -> %s\n",
                stats.samples, stats.wall_seconds, stats.truncated, out.c_str());
    if (count_cells) std::printf("cell evaluations: %" PRIu64 "\n", stats.cell_steps);
    return 0;
}

int cmd_grad_check(const std::string& config, double tolerance) {
    int passed = 0;
    char* report = nullptr;
    g2s_status st = g2s_grad_check(config.empty() ? nullptr : config.c_str(), tolerance,
                                   &passed, &report);
    if (st != G2S_OK) return fail(st);
    std::fputs(report, stdout);
    g2s_string_free(report);
    return passed ? 0 : 1;
}

int cmd_eval(const std::vector<std::string>& transcripts, const std::string& refs,
             std::string vocab) {
    if (vocab.empty()) vocab = default_vocab_path(refs);
    std::vector<const char*> paths;
    for (const std::string& t : transcripts) paths.push_back(t.c_str());

    g2s_eval_report rep;
    g2s_status st = g2s_evaluate(paths.data(), paths.size(), refs.c_str(), vocab.c_str(), &rep);
    if (st != G2S_OK) return fail(st);

    std::printf("runs %zu  samples %" PRIu64 "  ref labels %" PRIu64 "\n", paths.size(),
                rep.samples, rep.ref_labels);
    std::printf("WER %.4f  (sub %" PRIu64 "  ins %" PRIu64 "  del %" PRIu64 ")\n", rep.wer,
                rep.substitutions, rep.insertions, rep.deletions);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D sequence-to-sequence toolkit: synthetic data, training, beam decoding, scoring"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic transduction corpus");
    g2s_task_options task;
    g2s_task_options_init(&task);
    std::uint64_t n_train = 2000, n_dev = 200;
    std::string gen_out = "data";
    gen->add_option("--seed", task.seed, "generation seed");
    gen->add_option("--n", n_train, "number of training samples");
    gen->add_option("--n-dev", n_dev, "number of dev samples");
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--content-vocab", task.content_vocab_size, "content symbols");
    gen->add_option("--feature-dim", task.feature_dim, "frame feature dimension");
    gen->add_option("--repeats-min", task.repeats_min, "min frames per label");
    gen->add_option("--repeats-max", task.repeats_max, "max frames per label");
    gen->add_option("--noise-sigma", task.noise_sigma, "frame noise stddev");
    gen->add_option("--label-len-min", task.label_len_min, "min labels per sample");
    gen->add_option("--label-len-max", task.label_len_max, "max labels per sample");

    // train
    auto* train = app.add_subcommand("train", "train a model from a config file");
    std::string config, resume;
    train->add_option("--config", config, "key = value config file")->required();
    train->add_option("--resume", resume, "checkpoint to resume from");

    // decode
    auto* decode = app.add_subcommand("decode", "beam-search a dataset into transcripts");
    std::string ckpt, data_path, vocab_path, transcript_out = "transcripts.tsv";
    g2s_decode_options dopts;
    g2s_decode_options_init(&dopts);
    bool full_recompute = false, length_norm = false, count_cells = false;
    decode->add_option("--checkpoint", ckpt, "model checkpoint")->required();
    decode->add_option("--data", data_path, "dataset to decode")->required();
    decode->add_option("--vocab", vocab_path, "vocabulary (default: vocab.txt next to data)");
    decode->add_option("--out", transcript_out, "transcript output path");
    decode->add_option("--beam", dopts.beam_size, "beam size");
    decode->add_option("--max-rows", dopts.max_rows, "output length cap (0 = automatic)");
    decode->add_flag("--full-recompute", full_recompute,
                     "recompute the whole grid per output step (reference mode)");
    decode->add_flag("--length-norm", length_norm, "normalize final scores by output length");
    decode->add_flag("--count-cells", count_cells, "print the number of cell evaluations");

    // grad-check
    auto* gc = app.add_subcommand("grad-check", "verify gradients against finite differences");
    std::string gc_config;
    double tolerance = 1e-5;
    gc->add_option("--config", gc_config, "optional config selecting model dimensions");
    gc->add_option("--tolerance", tolerance, "max relative error allowed");

    // eval
    auto* eval = app.add_subcommand("eval", "score transcripts against a reference dataset");
    std::vector<std::string> transcripts;
    std::string refs, eval_vocab;
    eval->add_option("transcripts", transcripts, "transcript files (one per run)");
    eval->add_option("--runs", transcripts, "additional transcript files");
    eval->add_option("--refs", refs, "reference dataset")->required();
    eval->add_option("--vocab", eval_vocab, "vocabulary (default: vocab.txt next to refs)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    if (gen->parsed()) return cmd_gen_data(task, n_train, n_dev, gen_out);
    if (train->parsed()) return cmd_train(config, resume);
    if (decode->parsed()) {
        dopts.full_recompute = full_recompute ? 1 : 0;
        dopts.length_norm = length_norm ? 1 : 0;
        return cmd_decode(ckpt, data_path, vocab_path, transcript_out, dopts, count_cells);
    }
    if (gc->parsed()) return cmd_grad_check(gc_config, tolerance);
    if (eval->parsed()) {
        if (transcripts.empty()) {
            std::fprintf(stderr, "error: eval needs at least one transcript file\n");
            return 2;
        }
        return cmd_eval(transcripts, refs, eval_vocab);
    }
    return 2;
}
