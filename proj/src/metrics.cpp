#include "grid2seq/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "grid2seq/error.hpp"

namespace g2s {

EditCounts edit_distance(const std::vector<std::size_t>& hyp,
                         const std::vector<std::size_t>& ref) {
    const std::size_t m = hyp.size(), n = ref.size();
    // per cell: minimal cost, and the largest aligned-pair count achieving it
    struct Cell {
        std::size_t cost;
        std::size_t diag;
    };
    std::vector<Cell> dp((m + 1) * (n + 1));
    auto at = [&](std::size_t i, std::size_t j) -> Cell& { return dp[i * (n + 1) + j]; };
    for (std::size_t i = 0; i <= m; ++i) at(i, 0) = {i, 0};
    for (std::size_t j = 0; j <= n; ++j) at(0, j) = {j, 0};
    auto better = [](const Cell& a, const Cell& b) {
        return a.cost < b.cost || (a.cost == b.cost && a.diag > b.diag);
    };
    for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            const std::size_t sub = hyp[i - 1] == ref[j - 1] ? 0 : 1;
            Cell best = {at(i - 1, j - 1).cost + sub, at(i - 1, j - 1).diag + 1};
            Cell ins = {at(i - 1, j).cost + 1, at(i - 1, j).diag};
            Cell del = {at(i, j - 1).cost + 1, at(i, j - 1).diag};
            if (better(ins, best)) best = ins;
            if (better(del, best)) best = del;
            at(i, j) = best;
        }
    }
    const Cell final = at(m, n);
    EditCounts out;
    out.distance = final.cost;
    out.ins = m - final.diag;
    out.dels = n - final.diag;
    out.subs = final.cost - out.ins - out.dels;
    return out;
}

void save_transcripts(const std::vector<TranscriptEntry>& entries, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail_io("cannot write transcripts: " + path);
    char buf[40];
    for (const TranscriptEntry& e : entries) {
        out << e.id << "\t";
        for (std::size_t i = 0; i < e.symbols.size(); ++i) out << (i ? " " : "") << e.symbols[i];
        std::snprintf(buf, sizeof buf, "%.17g", e.log_prob);
        out << "\t" << buf << "\n";
    }
    if (!out) fail_io("write failed: " + path);
}

std::vector<TranscriptEntry> load_transcripts(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_io("cannot open transcripts: " + path);
    std::vector<TranscriptEntry> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t tab1 = line.find('\t');
        const std::size_t tab2 = tab1 == std::string::npos ? std::string::npos
                                                           : line.find('\t', tab1 + 1);
        if (tab2 == std::string::npos)
            fail_format("transcripts " + path + " line " + std::to_string(lineno) +
                        ": expected id<TAB>symbols<TAB>log_prob");
        TranscriptEntry e;
        e.id = line.substr(0, tab1);
        std::istringstream syms(line.substr(tab1 + 1, tab2 - tab1 - 1));
        std::string s;
        while (syms >> s) e.symbols.push_back(s);
        try {
            e.log_prob = std::stod(line.substr(tab2 + 1));
        } catch (const std::exception&) {
            fail_format("transcripts " + path + " line " + std::to_string(lineno) +
                        ": bad log_prob");
        }
        out.push_back(std::move(e));
    }
    return out;
}

MetricsReport evaluate_transcripts(const std::vector<TranscriptEntry>& hyps, const Dataset& refs,
                                   const Vocabulary& vocab) {
    std::unordered_map<std::string, const Sample*> by_id;
    for (const Sample& s : refs.samples) by_id[s.id] = &s;

    MetricsReport rep;
    std::size_t edits = 0;
    for (const TranscriptEntry& e : hyps) {
        auto it = by_id.find(e.id);
        if (it == by_id.end()) fail_invalid("evaluate: no reference for sample id " + e.id);
        std::vector<std::size_t> hyp_ids;
        hyp_ids.reserve(e.symbols.size());
        for (const std::string& s : e.symbols) hyp_ids.push_back(vocab.id(s));
        EditCounts c = edit_distance(hyp_ids, it->second->labels);
        edits += c.distance;
        rep.subs += c.subs;
        rep.ins += c.ins;
        rep.dels += c.dels;
        rep.ref_labels += it->second->labels.size();
        rep.samples += 1;
    }
    rep.wer = rep.ref_labels == 0 ? 0.0 : double(edits) / double(rep.ref_labels);
    return rep;
}

MetricsReport evaluate_runs(const std::vector<std::vector<TranscriptEntry>>& runs,
                            const Dataset& refs, const Vocabulary& vocab) {
    if (runs.empty()) fail_invalid("evaluate: no runs given");
    MetricsReport total;
    double wer_sum = 0.0;
    for (const auto& run : runs) {
        MetricsReport r = evaluate_transcripts(run, refs, vocab);
        wer_sum += r.wer;
        total.subs += r.subs;
        total.ins += r.ins;
        total.dels += r.dels;
        total.ref_labels += r.ref_labels;
        total.samples += r.samples;
    }
    total.wer = wer_sum / double(runs.size());
    return total;
}

} // namespace g2s
