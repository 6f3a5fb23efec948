// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "langadapt/train/stage.hpp"

namespace langadapt::train {

enum class Recipe { kEx1, kEx2 };

Recipe parse_recipe(const std::string& name);  // "ex1" / "ex2"
std::string to_string(Recipe r);

struct RecipeConfig {
  Recipe recipe = Recipe::kEx1;
  /// Split over the stages in proportion to 59040 : 30240 : 18720 : 40320
  /// (embed/head, odd, even, LoRA); Ex2 further splits the embed/head share
  /// 12960 : 46080 between new rows only and all rows.
  std::int64_t total_steps = 1000;
  double lr_high = 1e-3;  // embed/head and LoRA stages
  double lr_low = 1.5e-4;  // layer stages
  double warmup_ratio = 0.03;
  int batch = 16;
  int eval_every = 50;
  int early_stop_patience = 3;
  LoraConfig lora;
};

std::vector<StagePlan> recipe_stages(const RecipeConfig& cfg);

struct StageReport {
  StagePlan plan;
  StageResult result;
};

struct PipelineReport {
  EvalResult initial;
  EvalResult final;
  std::vector<StageReport> stages;

  std::vector<MetricRecord> timeline() const;
};

struct PipelineOptions {
  AdamWConfig optimizer;
  LoraConfig lora;
  std::uint64_t seed = 0;
};

/// Runs the stages in order on `params`. A lora_all stage attaches adapters
/// first (unless attached) and merges them after the stage.
template <typename T>
PipelineReport run_pipeline(ModelParams<T>& params, const std::vector<Sample>& train,
                            const std::vector<Sample>& eval, const std::vector<StagePlan>& stages,
                            const PipelineOptions& options);

/// Builds a fresh model and trains every tensor for plan.max_steps.
ModelParams<float> pretrain_base(const ModelConfig& cfg, const std::vector<Sample>& train,
                                 const std::vector<Sample>& eval, StagePlan plan, std::uint64_t seed,
                                 StageResult* result = nullptr);

}  // namespace langadapt::train
