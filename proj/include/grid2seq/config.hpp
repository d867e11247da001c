#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace g2s {

/// Flat `key = value` text, one pair per line, `#` starts a comment.
std::map<std::string, std::string> parse_kv_text(const std::string& text);
std::map<std::string, std::string> parse_kv_file(const std::string& path);

/// One encoder growth stage of layer-wise pretraining.
struct PretrainStage {
    std::size_t start_epoch = 0;
    std::size_t layers = 0;
    std::vector<std::size_t> pool_factors; // padded with 1s up to `layers`
};

struct TrainConfig {
    // data and output locations
    std::string train_data;
    std::string dev_data;
    std::string vocab;
    std::string out_dir;

    // model dimensions
    std::size_t enc_layers = 2;
    std::size_t enc_hidden = 32;
    std::vector<std::size_t> enc_pool_factors = {2, 4};
    std::size_t grid_hidden = 32;
    std::size_t embed_dim = 16;

    // optimization
    std::uint64_t seed = 1;
    std::size_t batch_size = 4;
    std::size_t max_epochs = 30;
    double base_lr = 3e-3;
    std::size_t warmup_steps = 500;
    double newbob_factor = 0.7;
    std::size_t newbob_patience = 1;
    double dropout = 0.3;
    double label_smoothing = 0.1;
    double grad_clip = 5.0;
    std::size_t checkpoint_every = 0; // 0: every half epoch

    std::vector<PretrainStage> pretrain; // empty: train the full stack from scratch

    static TrainConfig from_kv(const std::map<std::string, std::string>& kv);
    static TrainConfig from_file(const std::string& path);

    void validate() const;

    /// Normalized serialization; its FNV-1a hash goes into checkpoints so a
    /// resumed run can prove it uses the same configuration.
    std::string canonical_text() const;
    std::uint64_t hash() const;
};

std::uint64_t fnv1a64(const std::string& text);

} // namespace g2s
