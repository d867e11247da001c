#include "grid2seq/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "grid2seq/error.hpp"

namespace g2s {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long long x = std::stoll(v, &pos);
        if (pos != v.size() || x < 0) throw std::invalid_argument(v);
        return std::size_t(x);
    } catch (const std::exception&) {
        fail_format("config: bad integer for '" + key + "': " + v);
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        fail_format("config: bad integer for '" + key + "': " + v);
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        fail_format("config: bad number for '" + key + "': " + v);
    }
}

std::vector<std::size_t> parse_factor_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    for (const std::string& part : split(v, ',')) {
        const std::string p = trim(part);
        if (p.empty()) fail_format("config: empty entry in '" + key + "'");
        out.push_back(parse_size(key, p));
    }
    return out;
}

// "epoch:layers:f1,f2 ; epoch:layers:f1" — factors shorter than the layer
// count are padded with 1s
std::vector<PretrainStage> parse_pretrain(const std::string& v) {
    std::vector<PretrainStage> stages;
    if (trim(v).empty()) return stages;
    for (const std::string& part : split(v, ';')) {
        const std::string p = trim(part);
        if (p.empty()) continue;
        std::vector<std::string> fields = split(p, ':');
        if (fields.size() != 3) fail_format("config: pretrain stage must be epoch:layers:factors, got '" + p + "'");
        PretrainStage st;
        st.start_epoch = parse_size("pretrain", trim(fields[0]));
        st.layers = parse_size("pretrain", trim(fields[1]));
        st.pool_factors = parse_factor_list("pretrain", trim(fields[2]));
        if (st.layers == 0) fail_format("config: pretrain stage with zero layers");
        if (st.pool_factors.size() > st.layers)
            fail_format("config: pretrain stage has more pool factors than layers");
        while (st.pool_factors.size() < st.layers) st.pool_factors.push_back(1);
        stages.push_back(std::move(st));
    }
    return stages;
}

std::string format_factors(const std::vector<std::size_t>& fs) {
    std::string out;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(fs[i]);
    }
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::map<std::string, std::string> parse_kv_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail_format("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) fail_format("config line " + std::to_string(lineno) + ": empty key");
        if (kv.count(key)) fail_format("config: duplicate key '" + key + "'");
        kv[key] = val;
    }
    return kv;
}

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_io("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_kv_text(ss.str());
}

TrainConfig TrainConfig::from_kv(const std::map<std::string, std::string>& kv) {
    TrainConfig c;
    for (const auto& [key, val] : kv) {
        if (key == "train_data") c.train_data = val;
        else if (key == "dev_data") c.dev_data = val;
        else if (key == "vocab") c.vocab = val;
        else if (key == "out_dir") c.out_dir = val;
        else if (key == "enc_layers") c.enc_layers = parse_size(key, val);
        else if (key == "enc_hidden") c.enc_hidden = parse_size(key, val);
        else if (key == "enc_pool_factors") c.enc_pool_factors = parse_factor_list(key, val);
        else if (key == "grid_hidden") c.grid_hidden = parse_size(key, val);
        else if (key == "embed_dim") c.embed_dim = parse_size(key, val);
        else if (key == "seed") c.seed = parse_u64(key, val);
        else if (key == "batch_size") c.batch_size = parse_size(key, val);
        else if (key == "max_epochs") c.max_epochs = parse_size(key, val);
        else if (key == "base_lr") c.base_lr = parse_double(key, val);
        else if (key == "warmup_steps") c.warmup_steps = parse_size(key, val);
        else if (key == "newbob_factor") c.newbob_factor = parse_double(key, val);
        else if (key == "newbob_patience") c.newbob_patience = parse_size(key, val);
        else if (key == "dropout") c.dropout = parse_double(key, val);
        else if (key == "label_smoothing") c.label_smoothing = parse_double(key, val);
        else if (key == "grad_clip") c.grad_clip = parse_double(key, val);
        else if (key == "checkpoint_every") c.checkpoint_every = parse_size(key, val);
        else if (key == "pretrain") c.pretrain = parse_pretrain(val);
        else fail_format("config: unknown key '" + key + "'");
    }
    c.validate();
    return c;
}

TrainConfig TrainConfig::from_file(const std::string& path) {
    return from_kv(parse_kv_file(path));
}

void TrainConfig::validate() const {
    if (enc_layers == 0) fail_invalid("config: enc_layers must be >= 1");
    if (enc_pool_factors.size() != enc_layers)
        fail_invalid("config: enc_pool_factors must list one factor per layer");
    if (batch_size == 0) fail_invalid("config: batch_size must be >= 1");
    if (newbob_factor <= 0.0 || newbob_factor >= 1.0)
        fail_invalid("config: newbob_factor must lie in (0, 1)");
    if (dropout < 0.0 || dropout >= 1.0) fail_invalid("config: dropout must lie in [0, 1)");
    if (label_smoothing < 0.0 || label_smoothing >= 1.0)
        fail_invalid("config: label_smoothing must lie in [0, 1)");
    if (base_lr <= 0.0) fail_invalid("config: base_lr must be positive");

    if (!pretrain.empty()) {
        std::size_t reduction = 1;
        for (std::size_t f : enc_pool_factors) reduction *= f;
        std::size_t prev_epoch = 0, prev_layers = 0;
        for (std::size_t i = 0; i < pretrain.size(); ++i) {
            const PretrainStage& st = pretrain[i];
            if (i == 0 && st.start_epoch != 0)
                fail_invalid("config: first pretrain stage must start at epoch 0");
            if (i > 0 && (st.start_epoch <= prev_epoch || st.layers < prev_layers))
                fail_invalid("config: pretrain stages must grow with increasing epochs");
            std::size_t prod = 1;
            for (std::size_t f : st.pool_factors) prod *= f;
            if (prod != reduction)
                fail_invalid("config: pretrain stage reduction " + std::to_string(prod) +
                             " != total reduction " + std::to_string(reduction));
            prev_epoch = st.start_epoch;
            prev_layers = st.layers;
        }
        const PretrainStage& last = pretrain.back();
        if (last.layers != enc_layers || last.pool_factors != enc_pool_factors)
            fail_invalid("config: final pretrain stage must match enc_layers/enc_pool_factors");
    }
}

std::string TrainConfig::canonical_text() const {
    std::string s;
    s += "train_data=" + train_data + "\n";
    s += "dev_data=" + dev_data + "\n";
    s += "vocab=" + vocab + "\n";
    s += "enc_layers=" + std::to_string(enc_layers) + "\n";
    s += "enc_hidden=" + std::to_string(enc_hidden) + "\n";
    s += "enc_pool_factors=" + format_factors(enc_pool_factors) + "\n";
    s += "grid_hidden=" + std::to_string(grid_hidden) + "\n";
    s += "embed_dim=" + std::to_string(embed_dim) + "\n";
    s += "seed=" + std::to_string(seed) + "\n";
    s += "batch_size=" + std::to_string(batch_size) + "\n";
    s += "max_epochs=" + std::to_string(max_epochs) + "\n";
    s += "base_lr=" + format_double(base_lr) + "\n";
    s += "warmup_steps=" + std::to_string(warmup_steps) + "\n";
    s += "newbob_factor=" + format_double(newbob_factor) + "\n";
    s += "newbob_patience=" + std::to_string(newbob_patience) + "\n";
    s += "dropout=" + format_double(dropout) + "\n";
    s += "label_smoothing=" + format_double(label_smoothing) + "\n";
    s += "grad_clip=" + format_double(grad_clip) + "\n";
    s += "checkpoint_every=" + std::to_string(checkpoint_every) + "\n";
    s += "pretrain=";
    for (std::size_t i = 0; i < pretrain.size(); ++i) {
        if (i) s += ";";
        s += std::to_string(pretrain[i].start_epoch) + ":" + std::to_string(pretrain[i].layers) +
             ":" + format_factors(pretrain[i].pool_factors);
    }
    s += "\n";
    return s;
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t TrainConfig::hash() const { return fnv1a64(canonical_text()); }

} // namespace g2s
