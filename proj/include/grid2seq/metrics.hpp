#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "grid2seq/data.hpp"

namespace g2s {

/// Levenshtein alignment counts between a hypothesis and a reference.
/// Insertions are extra hypothesis tokens, deletions are reference tokens
/// the hypothesis missed. Among equal-cost alignments the one with the most
/// aligned (match or substitution) positions is reported, which prefers
/// substitutions over insertion/deletion pairs.
struct EditCounts {
    std::size_t distance = 0;
    std::size_t subs = 0;
    std::size_t ins = 0;
    std::size_t dels = 0;
};
EditCounts edit_distance(const std::vector<std::size_t>& hyp, const std::vector<std::size_t>& ref);

struct MetricsReport {
    double wer = 0.0; // mean over runs when aggregating
    std::size_t subs = 0, ins = 0, dels = 0;
    std::size_t ref_labels = 0;
    std::size_t samples = 0;
    double perplexity = std::nan("");
    double fer = std::nan("");
};

/// One line per sample: id <TAB> space-joined symbols <TAB> log_prob.
struct TranscriptEntry {
    std::string id;
    std::vector<std::string> symbols;
    double log_prob = 0.0;
};
void save_transcripts(const std::vector<TranscriptEntry>& entries, const std::string& path);
std::vector<TranscriptEntry> load_transcripts(const std::string& path);

/// Corpus WER of one transcript set against the reference dataset. Every
/// transcript id must have a reference.
MetricsReport evaluate_transcripts(const std::vector<TranscriptEntry>& hyps,
                                   const Dataset& refs, const Vocabulary& vocab);

/// Multi-run aggregation: per-run WERs averaged, counts summed.
MetricsReport evaluate_runs(const std::vector<std::vector<TranscriptEntry>>& runs,
                            const Dataset& refs, const Vocabulary& vocab);

} // namespace g2s
