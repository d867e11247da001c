#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grid2seq/tensor.hpp"
#include "grid2seq/vocab.hpp"

namespace g2s {

/// Synthetic monotonic transduction task: every label emits a run of noisy
/// copies of its prototype frame, so T ends up roughly `repeats` times N.
struct SyntheticTaskConfig {
    std::size_t content_vocab_size = 20;
    std::size_t feature_dim = 8;
    std::size_t repeats_min = 6;
    std::size_t repeats_max = 10;
    double noise_sigma = 0.3;
    std::size_t label_len_min = 2;
    std::size_t label_len_max = 12;
    std::uint64_t seed = 1;

    void validate() const;
};

struct Sample {
    std::string id;
    Tensor frames;                   // [T x F]
    std::vector<std::size_t> labels; // content ids, no <bos>/<eos>
};

struct Dataset {
    std::vector<Sample> samples;
    std::size_t size() const { return samples.size(); }
    std::size_t feature_dim() const { return samples.empty() ? 0 : samples[0].frames.extent(1); }
};

/// <bos>, <eos>, <pad>, <unk>, then the content symbols (letters, then u<N>).
Vocabulary make_task_vocabulary(std::size_t content_vocab_size);
std::size_t first_content_id();

/// Deterministic for a fixed config: sample i depends only on (seed,
/// id_prefix, i), so generation order does not matter. The prototype
/// codebook depends on the seed alone, which keeps differently-prefixed
/// splits of one seed on the same task.
Dataset generate_dataset(const SyntheticTaskConfig& cfg, std::size_t n_samples,
                         const std::string& id_prefix);

/// Text format per sample: header `T N F id`, T frame lines of F floats,
/// one line of N label symbols. Floats round-trip bit-exactly.
void save_dataset(const Dataset& dataset, const Vocabulary& vocab, const std::string& path);
Dataset load_dataset(const std::string& path, const Vocabulary& vocab);

} // namespace g2s
