#include "grid2seq/decoder.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>

namespace g2s {

namespace {

std::size_t last_or_bos(const Hypothesis& hyp) {
    return hyp.prefix.empty() ? Vocabulary::kBos : hyp.prefix.back();
}

// Search hypotheses may carry any vocabulary id, so the lattice inputs are
// assembled from per-row inputs instead of the teacher-forcing builder
// (which rejects <bos>/<eos> in label positions).
Tensor grid_inputs_for_prefix(const Model& m, const EncoderStates& h,
                              const std::vector<std::size_t>& prefix) {
    const std::size_t cols = h.reduced_len();
    const std::size_t width = h.h.extent(1) + m.cfg.embed_dim;
    Tensor inputs({prefix.size() + 1, cols, width});
    for (std::size_t n = 0; n <= prefix.size(); ++n) {
        const std::size_t prev = n == 0 ? Vocabulary::kBos : prefix[n - 1];
        Tensor row = build_row_inputs(h, prev, m.embed.value);
        std::copy(row.data(), row.data() + row.numel(), inputs.at3(n, 0));
    }
    return inputs;
}

Tensor row_logits_from_state(const Model& m, const RowState& row) {
    return readout_logits(m, row.s.data(), row.cols());
}

// ranking: higher score first, ties by the emitted sequence with <eos>
// materialized, so an end-of-sequence extension competes under its label id
// exactly like any other extension
bool candidate_before(const Hypothesis& a, const Hypothesis& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    const std::size_t la = a.prefix.size() + (a.finished ? 1 : 0);
    const std::size_t lb = b.prefix.size() + (b.finished ? 1 : 0);
    for (std::size_t i = 0; i < std::min(la, lb); ++i) {
        const std::size_t va = i < a.prefix.size() ? a.prefix[i] : Vocabulary::kEos;
        const std::size_t vb = i < b.prefix.size() ? b.prefix[i] : Vocabulary::kEos;
        if (va != vb) return va < vb;
    }
    return la < lb;
}

} // namespace

StepScores score_next_row(const Model& m, const EncoderStates& h, const Hypothesis& hyp,
                          std::uint64_t* cell_counter) {
    if (hyp.row_cache && hyp.row_cache->cols() != h.reduced_len())
        fail_invalid("decode: cached row has " + std::to_string(hyp.row_cache->cols()) +
                     " columns, encoder states have " + std::to_string(h.reduced_len()));
    Tensor inputs = build_row_inputs(h, last_or_bos(hyp), m.embed.value);
    RowState row = forward_row(inputs, hyp.row_cache.get(), m.grid, cell_counter);

    StepScores out;
    out.log_probs = log_softmax(row_logits_from_state(m, row));
    out.row = std::make_shared<RowState>(std::move(row));
    return out;
}

StepScores score_next_row_full(const Model& m, const EncoderStates& h, const Hypothesis& hyp,
                               std::uint64_t* cell_counter) {
    Tensor inputs = grid_inputs_for_prefix(m, h, hyp.prefix);
    GridState grid = forward_grid(inputs, m.grid, GridSchedule::kRowMajor, cell_counter);
    const std::size_t last_row = grid.rows;

    StepScores out;
    out.log_probs = log_softmax(readout_logits(m, grid.s_row(last_row), grid.cols));
    out.row = std::make_shared<RowState>(grid.row_state(last_row));
    return out;
}

std::vector<Hypothesis> decode_step(const std::vector<Hypothesis>& hyps, const EncoderStates& h,
                                    const Model& m, bool full_recompute,
                                    std::uint64_t* cell_counter) {
    std::vector<Hypothesis> out;
    for (const Hypothesis& hyp : hyps) {
        if (hyp.finished) {
            out.push_back(hyp);
            continue;
        }
        StepScores scores = full_recompute ? score_next_row_full(m, h, hyp, cell_counter)
                                           : score_next_row(m, h, hyp, cell_counter);
        for (std::size_t v = 0; v < scores.log_probs.numel(); ++v) {
            Hypothesis ext;
            ext.prefix = hyp.prefix;
            ext.log_prob = hyp.log_prob + scores.log_probs[v];
            ext.row_cache = scores.row;
            if (v == Vocabulary::kEos) {
                ext.finished = true;
            } else {
                ext.prefix.push_back(v);
            }
            out.push_back(std::move(ext));
        }
    }
    return out;
}

PrefixScore score_prefix(const Model& m, const EncoderStates& h,
                         const std::vector<std::size_t>& prefix, bool full_recompute) {
    PrefixScore out;
    Hypothesis hyp;
    for (std::size_t w : prefix) {
        StepScores s = full_recompute ? score_next_row_full(m, h, hyp, &out.cell_steps)
                                      : score_next_row(m, h, hyp, &out.cell_steps);
        out.log_prob += s.log_probs[w];
        out.step_log_probs.push_back(s.log_probs);
        hyp.prefix.push_back(w);
        hyp.row_cache = s.row;
    }
    return out;
}

DecodeResult beam_search(const Model& m, const Tensor& frames, const BeamConfig& cfg) {
    if (cfg.beam_size == 0) fail_invalid("beam_search: beam size must be >= 1");
    EncoderTrace enc = encode(frames, m.cfg.encoder, m.encoder);
    const EncoderStates& h = enc.states;
    const std::size_t max_rows = cfg.max_rows > 0 ? cfg.max_rows : 2 * h.reduced_len() + 5;

    std::uint64_t cells = 0;
    std::vector<Hypothesis> active(1); // the empty hypothesis
    std::vector<Hypothesis> finished;

    for (std::size_t depth = 0; depth < max_rows && !active.empty(); ++depth) {
        std::vector<Hypothesis> cands = decode_step(active, h, m, cfg.full_recompute, &cells);
        std::sort(cands.begin(), cands.end(), candidate_before);

        const std::size_t cut = std::min(cfg.beam_size, cands.size());
        std::size_t eos_in_cut = 0;
        for (std::size_t i = 0; i < cut; ++i) {
            if (cands[i].finished) {
                finished.push_back(cands[i]);
                ++eos_in_cut;
            }
        }
        std::vector<Hypothesis> next;
        for (const Hypothesis& c : cands) {
            if (next.size() == cfg.beam_size) break;
            if (!c.finished) next.push_back(c);
        }
        if (eos_in_cut == cut) break; // every beam slot ended the sequence
        active = std::move(next);
    }

    auto final_key = [&](const Hypothesis& hyp) {
        return cfg.length_norm ? hyp.log_prob / double(hyp.prefix.size() + 1) : hyp.log_prob;
    };

    DecodeResult out;
    out.cell_steps = cells;
    if (!finished.empty()) {
        const Hypothesis* best = &finished[0];
        for (const Hypothesis& f : finished) {
            if (final_key(f) > final_key(*best) ||
                (final_key(f) == final_key(*best) && candidate_before(f, *best)))
                best = &f;
        }
        out.labels = best->prefix;
        out.log_prob = best->log_prob;
        out.truncated = false;
    } else {
        // budget ran out with nothing finished: report the best open hypothesis
        const Hypothesis* best = nullptr;
        for (const Hypothesis& a : active)
            if (!best || candidate_before(a, *best)) best = &a;
        if (best) {
            out.labels = best->prefix;
            out.log_prob = best->log_prob;
        }
        out.truncated = true;
    }
    return out;
}

DecodeResult greedy_decode(const Model& m, const Tensor& frames, std::size_t max_rows) {
    EncoderTrace enc = encode(frames, m.cfg.encoder, m.encoder);
    const EncoderStates& h = enc.states;
    if (max_rows == 0) max_rows = 2 * h.reduced_len() + 5;

    DecodeResult out;
    RowState row;
    std::size_t prev = Vocabulary::kBos;
    for (std::size_t depth = 0; depth < max_rows; ++depth) {
        Tensor inputs = build_row_inputs(h, prev, m.embed.value);
        RowState next = forward_row(inputs, depth == 0 ? nullptr : &row, m.grid, &out.cell_steps);
        Tensor lsm = log_softmax(readout_logits(m, next.s.data(), next.cols()));
        std::size_t best = 0;
        for (std::size_t v = 1; v < lsm.numel(); ++v)
            if (lsm[v] > lsm[best]) best = v;
        out.log_prob += lsm[best];
        if (best == Vocabulary::kEos) return out;
        out.labels.push_back(best);
        prev = best;
        row = std::move(next);
    }
    out.truncated = true;
    return out;
}

std::vector<TranscriptEntry> decode_corpus(const Model& m, const Dataset& data,
                                           const Vocabulary& vocab, const BeamConfig& cfg,
                                           CorpusDecodeStats* stats) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<TranscriptEntry> out;
    CorpusDecodeStats local;
    for (const Sample& s : data.samples) {
        DecodeResult r = beam_search(m, s.frames, cfg);
        TranscriptEntry e;
        e.id = s.id;
        for (std::size_t w : r.labels) e.symbols.push_back(vocab.symbol(w));
        e.log_prob = r.log_prob;
        out.push_back(std::move(e));
        local.cell_steps += r.cell_steps;
        local.truncated += r.truncated ? 1 : 0;
        local.samples += 1;
    }
    local.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (stats) *stats = local;
    return out;
}

} // namespace g2s
