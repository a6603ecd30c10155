#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "voin/core/config.hpp"
#include "voin/nn/params.hpp"

namespace voin::nn {

/// Binary layout, all integers little-endian:
///   "VOINCKPT"  u32 version(=1)
///   u32 meta_len, meta_len bytes of `key = value` lines (model configuration)
///   u32 count, then per array: u32 name_len, name, u32 rank, rank × i64 dims, u64 offset
///   payload of IEEE-754 float64 values; array i starts at element `offset`
struct Checkpoint {
    FlatConfig meta;
    std::vector<std::pair<std::string, Tensor>> arrays;
};

void save_checkpoint(const std::filesystem::path& path, const ParamStore& store, const FlatConfig& meta);
Checkpoint read_checkpoint(const std::filesystem::path& path);
/// Copies every array into the store; names and shapes must match exactly.
void load_into(ParamStore& store, const Checkpoint& ckpt);

}  // namespace voin::nn
