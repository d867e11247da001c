#pragma once

#include <memory>

#include "grid2seq/metrics.hpp"
#include "grid2seq/model.hpp"

namespace g2s {

struct BeamConfig {
    std::size_t beam_size = 12;
    std::size_t max_rows = 0;    // 0: 2 * T' + 5
    bool length_norm = false;    // normalize finished scores by output length
    bool full_recompute = false; // oracle mode: rebuild the whole grid per row
};

/// A beam candidate. The cached row holds the grid states produced when the
/// last prefix label was consumed, so extending the hypothesis costs one
/// forward_row instead of re-running the whole lattice. The cache is shared
/// between sibling extensions of the same parent.
struct Hypothesis {
    std::vector<std::size_t> prefix; // emitted labels, no <bos>/<eos>
    double log_prob = 0.0;
    std::shared_ptr<const RowState> row_cache; // null: no rows computed yet
    bool finished = false;
};

/// Scores for extending one hypothesis by one row.
struct StepScores {
    Tensor log_probs; // [V]
    std::shared_ptr<const RowState> row;
};

/// Advance one grid row for `hyp` using its cached previous row.
StepScores score_next_row(const Model& m, const EncoderStates& h, const Hypothesis& hyp,
                          std::uint64_t* cell_counter = nullptr);

/// Oracle variant: recomputes every previous row from scratch. Exists to
/// validate the incremental path and to expose its cost.
StepScores score_next_row_full(const Model& m, const EncoderStates& h, const Hypothesis& hyp,
                               std::uint64_t* cell_counter = nullptr);

/// Expands every unfinished hypothesis into V scored extensions; finished
/// hypotheses pass through unchanged.
std::vector<Hypothesis> decode_step(const std::vector<Hypothesis>& hyps, const EncoderStates& h,
                                    const Model& m, bool full_recompute = false,
                                    std::uint64_t* cell_counter = nullptr);

/// Per-step log-probabilities of a fixed prefix, plus the cell-evaluation
/// count, in either mode.
struct PrefixScore {
    double log_prob = 0.0;          // sum over the prefix labels
    std::vector<Tensor> step_log_probs;
    std::uint64_t cell_steps = 0;
};
PrefixScore score_prefix(const Model& m, const EncoderStates& h,
                         const std::vector<std::size_t>& prefix, bool full_recompute);

struct DecodeResult {
    std::vector<std::size_t> labels;
    double log_prob = 0.0;
    bool truncated = false;     // ran into max_rows without finishing
    std::uint64_t cell_steps = 0;
};

DecodeResult beam_search(const Model& m, const Tensor& frames, const BeamConfig& cfg);

/// Independent greedy reference: plain argmax chain, stops at <eos>.
DecodeResult greedy_decode(const Model& m, const Tensor& frames, std::size_t max_rows = 0);

struct CorpusDecodeStats {
    double wall_seconds = 0.0;
    std::uint64_t cell_steps = 0;
    std::size_t truncated = 0;
    std::size_t samples = 0;
};

/// Decodes every sample in input order and renders transcripts with the
/// vocabulary's symbols.
std::vector<TranscriptEntry> decode_corpus(const Model& m, const Dataset& data,
                                           const Vocabulary& vocab, const BeamConfig& cfg,
                                           CorpusDecodeStats* stats = nullptr);

} // namespace g2s
