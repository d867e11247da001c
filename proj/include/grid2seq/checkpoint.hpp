#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "grid2seq/tensor.hpp"

namespace g2s {

/// Versioned binary checkpoint. Layout, all little-endian:
///   magic "G2S1" | config hash u64 | step u64 | records until EOF
/// record: name length u32 | name bytes | rank u32 | extents u64 each |
///         values f64 each, row-major.
/// Model parameters come first, then per-parameter optimizer moments
/// (adam.m.<name>, adam.v.<name>), then state.* records carrying training
/// progress.
struct CheckpointData {
    std::uint64_t config_hash = 0;
    std::uint64_t step = 0;
    std::vector<std::pair<std::string, Tensor>> records;

    const Tensor* find(const std::string& name) const;
    const Tensor& require(const std::string& name) const;
};

void write_checkpoint(const std::string& path, const CheckpointData& data);
CheckpointData read_checkpoint(const std::string& path);

/// Exact u64 <-> f64-pair packing for counters stored in tensor records.
void pack_u64(std::uint64_t x, double& hi, double& lo);
std::uint64_t unpack_u64(double hi, double lo);

} // namespace g2s
