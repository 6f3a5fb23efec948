// SPDX-License-Identifier: Apache-2.0
#include "langadapt/train/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "langadapt/common/error.hpp"
#include "langadapt/common/rng.hpp"
#include "langadapt/train/lora.hpp"

namespace langadapt::train {
namespace {

// Largest-remainder split of `total` by integer weights; sums to total exactly.
std::vector<std::int64_t> split_steps(std::int64_t total, const std::vector<std::int64_t>& weights) {
  const std::int64_t wsum = std::accumulate(weights.begin(), weights.end(), std::int64_t{0});
  std::vector<std::int64_t> out(weights.size());
  std::vector<std::pair<std::int64_t, std::size_t>> rem;
  std::int64_t used = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out[i] = total * weights[i] / wsum;
    used += out[i];
    rem.emplace_back(total * weights[i] % wsum, i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < total; ++k, ++used) ++out[rem[k].second];
  return out;
}

}  // namespace

Recipe parse_recipe(const std::string& name) {
  if (name == "ex1") return Recipe::kEx1;
  if (name == "ex2") return Recipe::kEx2;
  throw ConfigError("recipe", "unknown recipe '" + name + "' (expected ex1 or ex2)");
}

std::string to_string(Recipe r) { return r == Recipe::kEx1 ? "ex1" : "ex2"; }

std::vector<StagePlan> recipe_stages(const RecipeConfig& cfg) {
  if (cfg.total_steps < 0) throw ConfigError("total_steps", "must be >= 0");
  auto plan = [&](const char* name, double lr, std::int64_t steps) {
    StagePlan p;
    p.name = name;
    p.peak_lr = lr;
    p.warmup_ratio = cfg.warmup_ratio;
    p.max_steps = steps;
    p.batch = cfg.batch;
    p.eval_every = cfg.eval_every;
    p.early_stop_patience = cfg.early_stop_patience;
    validate(p);
    return p;
  };
  std::vector<StagePlan> out;
  if (cfg.recipe == Recipe::kEx1) {
    const auto s = split_steps(cfg.total_steps, {59040, 30240, 18720, 40320});
    out.push_back(plan("embed_head", cfg.lr_high, s[0]));
    out.push_back(plan("odd_layers", cfg.lr_low, s[1]));
    out.push_back(plan("even_layers", cfg.lr_low, s[2]));
    out.push_back(plan("lora_all", cfg.lr_high, s[3]));
  } else {
    const auto s = split_steps(cfg.total_steps, {12960, 46080, 30240, 18720, 40320});
    out.push_back(plan("new_embed_head", cfg.lr_high, s[0]));
    out.push_back(plan("embed_head", cfg.lr_high, s[1]));
    out.push_back(plan("odd_layers", cfg.lr_low, s[2]));
    out.push_back(plan("even_layers", cfg.lr_low, s[3]));
    out.push_back(plan("lora_all", cfg.lr_high, s[4]));
  }
  return out;
}

std::vector<MetricRecord> PipelineReport::timeline() const {
  std::vector<MetricRecord> out;
  for (const auto& s : stages) out.insert(out.end(), s.result.timeline.begin(), s.result.timeline.end());
  return out;
}

template <typename T>
PipelineReport run_pipeline(ModelParams<T>& params, const std::vector<Sample>& train,
                            const std::vector<Sample>& eval, const std::vector<StagePlan>& stages,
                            const PipelineOptions& options) {
  for (const auto& s : stages) validate(s);
  PipelineReport report;
  report.initial = evaluate(params, eval);
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const StagePlan& plan = stages[i];
    StageOptions so;
    so.optimizer = options.optimizer;
    so.seed = derive_seed(options.seed, 100 + i);
    const bool lora_stage = plan.name == "lora_all";
    if (lora_stage && params.adapters.empty()) lora_attach(params, options.lora, derive_seed(options.seed, 200 + i));
    StageResult r = train_stage(params, train, eval, plan, so);
    if (lora_stage) lora_merge(params);
    report.stages.push_back({plan, std::move(r)});
  }
  report.final = evaluate(params, eval);
  return report;
}

ModelParams<float> pretrain_base(const ModelConfig& cfg, const std::vector<Sample>& train,
                                 const std::vector<Sample>& eval, StagePlan plan, std::uint64_t seed,
                                 StageResult* result) {
  ModelParams<float> p = build_model<float>(cfg, derive_seed(seed, 1));
  plan.name = "full";
  StageOptions so;
  so.seed = derive_seed(seed, 2);
  StageResult r = train_stage(p, train, eval, plan, so);
  if (result) *result = std::move(r);
  return p;
}

template PipelineReport run_pipeline<float>(ModelParams<float>&, const std::vector<Sample>&,
                                            const std::vector<Sample>&, const std::vector<StagePlan>&,
                                            const PipelineOptions&);
template PipelineReport run_pipeline<double>(ModelParams<double>&, const std::vector<Sample>&,
                                             const std::vector<Sample>&, const std::vector<StagePlan>&,
                                             const PipelineOptions&);

}  // namespace langadapt::train
