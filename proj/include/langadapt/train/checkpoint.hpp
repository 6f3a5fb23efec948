// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "langadapt/train/model.hpp"

namespace langadapt::train {

struct CheckpointInfo {
  std::string config_hash;
  std::uint64_t step = 0;
};

/// "CKPT", u32 version, length-prefixed config hash, u64 step, length-prefixed
/// config JSON (model config, partition, LoRA settings), u32 tensor count,
/// then per tensor a length-prefixed name and an EMB1 record. Values are
/// stored as float32.
template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ModelParams<T>& params, std::uint64_t step);

template <typename T>
std::string serialize_checkpoint(const ModelParams<T>& params, std::uint64_t step);

/// All tensors come back trainable; callers re-apply a stage mask.
ModelParams<float> load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info = nullptr);
ModelParams<float> parse_checkpoint(std::string_view bytes, CheckpointInfo* info = nullptr);

}  // namespace langadapt::train
