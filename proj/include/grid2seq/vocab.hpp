#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace g2s {

/// Symbol table. Ids are line numbers of the vocabulary file; the first two
/// lines are fixed to `<bos>` and `<eos>`.
class Vocabulary {
public:
    static constexpr std::size_t kBos = 0;
    static constexpr std::size_t kEos = 1;

    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> symbols);

    static Vocabulary load(const std::string& path);
    void save(const std::string& path) const;

    std::size_t size() const { return symbols_.size(); }
    const std::string& symbol(std::size_t id) const;
    std::size_t id(const std::string& symbol) const;
    bool contains(const std::string& symbol) const { return by_name_.count(symbol) > 0; }

private:
    std::vector<std::string> symbols_;
    std::unordered_map<std::string, std::size_t> by_name_;
};

} // namespace g2s
