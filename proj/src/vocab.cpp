#include "grid2seq/vocab.hpp"

#include <fstream>

#include "grid2seq/error.hpp"

namespace g2s {

Vocabulary::Vocabulary(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
    if (symbols_.size() < 2 || symbols_[kBos] != "<bos>" || symbols_[kEos] != "<eos>")
        fail_format("vocabulary must start with <bos> and <eos>");
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
        if (symbols_[i].empty()) fail_format("vocabulary: empty symbol at id " + std::to_string(i));
        auto [it, fresh] = by_name_.emplace(symbols_[i], i);
        if (!fresh) fail_format("vocabulary: duplicate symbol '" + symbols_[i] + "'");
    }
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_io("cannot open vocabulary file: " + path);
    std::vector<std::string> symbols;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        symbols.push_back(line);
    }
    return Vocabulary(std::move(symbols));
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) fail_io("cannot write vocabulary file: " + path);
    for (const std::string& s : symbols_) out << s << "\n";
}

const std::string& Vocabulary::symbol(std::size_t id) const {
    if (id >= symbols_.size())
        fail_invalid("vocabulary: id " + std::to_string(id) + " out of range (size " +
                     std::to_string(symbols_.size()) + ")");
    return symbols_[id];
}

std::size_t Vocabulary::id(const std::string& symbol) const {
    auto it = by_name_.find(symbol);
    if (it == by_name_.end()) fail_invalid("vocabulary: unknown symbol '" + symbol + "'");
    return it->second;
}

} // namespace g2s
