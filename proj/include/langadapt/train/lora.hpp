// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "langadapt/train/model.hpp"

namespace langadapt::train {

/// Adds A (r x in, N(0, init_std^2)) and B (out x r, zero) to every target
/// projection of every block. Effective weight: W + (alpha / r) * B * A.
/// New adapter tensors are marked trainable. Throws StateError if adapters
/// are already attached and ConfigError on a bad rank or target name.
template <typename T>
void lora_attach(ModelParams<T>& params, const LoraConfig& cfg, std::uint64_t seed);

/// Folds every adapter into its base weight and removes the adapters.
/// Throws StateError if none are attached.
template <typename T>
void lora_merge(ModelParams<T>& params);

/// Number of adapter parameters lora_attach would add.
std::uint64_t lora_parameter_count(const ModelConfig& model, const LoraConfig& cfg);

}  // namespace langadapt::train
