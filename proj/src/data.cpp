#include "grid2seq/data.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "grid2seq/config.hpp"
#include "grid2seq/error.hpp"

namespace g2s {

namespace {

constexpr std::uint64_t kCodebookStream = 0xC0DEB00Cull;
constexpr std::uint64_t kSampleStream = 0x5A3B1E00ull;

std::string content_symbol(std::size_t i) {
    if (i < 26) return std::string(1, char('a' + i));
    return "u" + std::to_string(i);
}

Tensor make_codebook(const SyntheticTaskConfig& cfg) {
    SeededRng rng(SeededRng::mix2(cfg.seed, kCodebookStream));
    Tensor proto({cfg.content_vocab_size, cfg.feature_dim});
    for (std::size_t i = 0; i < proto.numel(); ++i) proto[i] = rng.uniform(-1.0, 1.0);
    return proto;
}

} // namespace

void SyntheticTaskConfig::validate() const {
    if (content_vocab_size < 2) fail_invalid("task: content vocabulary must hold >= 2 symbols");
    if (repeats_min < 1 || repeats_max < repeats_min) fail_invalid("task: bad repeat range");
    if (label_len_min < 1 || label_len_max < label_len_min) fail_invalid("task: bad length range");
    if (noise_sigma < 0.0) fail_invalid("task: noise_sigma must be >= 0");
    if (feature_dim == 0) fail_invalid("task: feature_dim must be >= 1");
}

std::size_t first_content_id() { return 4; } // after <bos>, <eos>, <pad>, <unk>

Vocabulary make_task_vocabulary(std::size_t content_vocab_size) {
    std::vector<std::string> symbols = {"<bos>", "<eos>", "<pad>", "<unk>"};
    for (std::size_t i = 0; i < content_vocab_size; ++i) symbols.push_back(content_symbol(i));
    return Vocabulary(std::move(symbols));
}

Dataset generate_dataset(const SyntheticTaskConfig& cfg, std::size_t n_samples,
                         const std::string& id_prefix) {
    cfg.validate();
    const Tensor proto = make_codebook(cfg);
    const std::size_t base = first_content_id();

    Dataset out;
    out.samples.reserve(n_samples);
    const std::uint64_t split_stream = SeededRng::mix2(kSampleStream, fnv1a64(id_prefix));
    for (std::size_t i = 0; i < n_samples; ++i) {
        SeededRng rng(SeededRng::mix3(cfg.seed, split_stream, i));
        Sample s;
        char idbuf[64];
        std::snprintf(idbuf, sizeof idbuf, "%s-%06zu", id_prefix.c_str(), i);
        s.id = idbuf;

        const std::size_t n_labels =
            cfg.label_len_min + rng.uniform_int(cfg.label_len_max - cfg.label_len_min + 1);
        std::vector<std::size_t> repeats(n_labels);
        std::size_t total_frames = 0;
        for (std::size_t j = 0; j < n_labels; ++j) {
            s.labels.push_back(base + rng.uniform_int(cfg.content_vocab_size));
            repeats[j] = cfg.repeats_min + rng.uniform_int(cfg.repeats_max - cfg.repeats_min + 1);
            total_frames += repeats[j];
        }

        s.frames = Tensor({total_frames, cfg.feature_dim});
        std::size_t t = 0;
        for (std::size_t j = 0; j < n_labels; ++j) {
            const double* p = proto.row(s.labels[j] - base);
            for (std::size_t r = 0; r < repeats[j]; ++r, ++t) {
                double* f = s.frames.row(t);
                for (std::size_t k = 0; k < cfg.feature_dim; ++k)
                    f[k] = p[k] + cfg.noise_sigma * rng.gaussian();
            }
        }
        out.samples.push_back(std::move(s));
    }
    return out;
}

void save_dataset(const Dataset& dataset, const Vocabulary& vocab, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail_io("cannot write dataset: " + path);
    char buf[40];
    for (const Sample& s : dataset.samples) {
        const std::size_t t_len = s.frames.extent(0), f = s.frames.extent(1);
        out << t_len << " " << s.labels.size() << " " << f << " " << s.id << "\n";
        for (std::size_t t = 0; t < t_len; ++t) {
            const double* row = s.frames.row(t);
            for (std::size_t k = 0; k < f; ++k) {
                std::snprintf(buf, sizeof buf, "%.17g", row[k]);
                out << (k ? " " : "") << buf;
            }
            out << "\n";
        }
        for (std::size_t j = 0; j < s.labels.size(); ++j)
            out << (j ? " " : "") << vocab.symbol(s.labels[j]);
        out << "\n";
    }
    if (!out) fail_io("write failed: " + path);
}

Dataset load_dataset(const std::string& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) fail_io("cannot open dataset: " + path);
    Dataset out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream hdr(line);
        std::size_t t_len = 0, n_labels = 0, f = 0;
        std::string id;
        if (!(hdr >> t_len >> n_labels >> f >> id) || t_len == 0 || f == 0)
            fail_format("dataset " + path + " line " + std::to_string(lineno) +
                        ": bad sample header");
        Sample s;
        s.id = id;
        s.frames = Tensor({t_len, f});
        for (std::size_t t = 0; t < t_len; ++t) {
            if (!std::getline(in, line))
                fail_format("dataset " + path + ": truncated frames for " + id);
            ++lineno;
            const char* p = line.c_str();
            char* end = nullptr;
            for (std::size_t k = 0; k < f; ++k) {
                const double v = std::strtod(p, &end);
                if (end == p)
                    fail_format("dataset " + path + " line " + std::to_string(lineno) +
                                ": expected " + std::to_string(f) + " floats");
                s.frames.row(t)[k] = v;
                p = end;
            }
        }
        if (n_labels > 0) {
            if (!std::getline(in, line))
                fail_format("dataset " + path + ": truncated labels for " + id);
            ++lineno;
            std::istringstream ls(line);
            std::string sym;
            while (ls >> sym) s.labels.push_back(vocab.id(sym));
        } else {
            if (!std::getline(in, line) || !line.empty())
                fail_format("dataset " + path + ": expected empty label line for " + id);
            ++lineno;
        }
        if (s.labels.size() != n_labels)
            fail_format("dataset " + path + ": sample " + id + " header claims " +
                        std::to_string(n_labels) + " labels, found " +
                        std::to_string(s.labels.size()));
        out.samples.push_back(std::move(s));
    }
    return out;
}

} // namespace g2s
