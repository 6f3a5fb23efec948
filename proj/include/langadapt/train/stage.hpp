// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "langadapt/train/data.hpp"
#include "langadapt/train/optimizer.hpp"

namespace langadapt::train {

/// Known plan names: new_embed_head, embed_head, odd_layers, even_layers, lora_all, full.
const std::vector<std::string>& stage_names();

struct StagePlan {
  std::string name = "full";
  double peak_lr = 1e-3;
  double warmup_ratio = 0.03;
  std::int64_t max_steps = 100;
  int batch = 16;
  int eval_every = 50;
  /// Evals without eval-loss improvement before stopping; 0 disables.
  int early_stop_patience = 3;
};

void validate(const StagePlan& plan);
Json to_json(const StagePlan& plan);
StagePlan stage_plan_from_json(const Json& j);

/// Sets trainable flags for the plan and returns trainable / total parameters
/// (adapters count in both). Blocks are 0-based: odd_layers = 1, 3, 5, ...
/// Throws ConfigError on an unknown name, StateError for lora_all without adapters.
template <typename T>
double apply_stage_mask(ModelParams<T>& params, const std::string& plan_name);

template <typename T>
std::uint64_t trainable_parameters(const ModelParams<T>& params);

struct MetricRecord {
  std::string stage;
  std::int64_t step = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double eval_loss = 0.0;
  double eval_accuracy = 0.0;
  double trainable_fraction = 0.0;
};

Json to_json(const MetricRecord& r);

struct StageResult {
  std::vector<MetricRecord> timeline;
  std::int64_t steps_run = 0;
  bool early_stopped = false;
  double trainable_fraction = 0.0;
};

struct StageOptions {
  AdamWConfig optimizer;
  std::uint64_t seed = 0;
  /// Where to write a checkpoint if the loss turns non-finite.
  std::optional<std::filesystem::path> diagnostic_checkpoint;
};

/// Masks the model for `plan`, then runs AdamW with cosine_lr for up to
/// max_steps batches. Evaluates every eval_every steps and after the last step.
/// Non-finite training loss writes the diagnostic checkpoint and throws DataError.
template <typename T>
StageResult train_stage(ModelParams<T>& params, const std::vector<Sample>& train, const std::vector<Sample>& eval,
                        const StagePlan& plan, const StageOptions& options);

}  // namespace langadapt::train
