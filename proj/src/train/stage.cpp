// SPDX-License-Identifier: Apache-2.0
#include "langadapt/train/stage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "langadapt/common/error.hpp"
#include "langadapt/train/checkpoint.hpp"
#include "langadapt/train/schedule.hpp"

namespace langadapt::train {

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"new_embed_head", "embed_head", "odd_layers",
                                                 "even_layers",    "lora_all",   "full"};
  return names;
}

void validate(const StagePlan& plan) {
  const auto& names = stage_names();
  if (std::find(names.begin(), names.end(), plan.name) == names.end()) {
    throw ConfigError("name", "unknown stage plan '" + plan.name + "'");
  }
  if (!(plan.peak_lr > 0.0)) throw ConfigError("peak_lr", "must be positive");
  if (!(plan.warmup_ratio >= 0.0 && plan.warmup_ratio < 1.0)) throw ConfigError("warmup_ratio", "must be in [0, 1)");
  if (plan.max_steps < 0) throw ConfigError("max_steps", "must be >= 0");
  if (plan.batch < 1) throw ConfigError("batch", "must be >= 1");
  if (plan.eval_every < 1) throw ConfigError("eval_every", "must be >= 1");
  if (plan.early_stop_patience < 0) throw ConfigError("early_stop_patience", "must be >= 0");
}

Json to_json(const StagePlan& plan) {
  return Json{{"name", plan.name},           {"peak_lr", plan.peak_lr},       {"warmup_ratio", plan.warmup_ratio},
              {"max_steps", plan.max_steps}, {"batch", plan.batch},           {"eval_every", plan.eval_every},
              {"early_stop_patience", plan.early_stop_patience}};
}

StagePlan stage_plan_from_json(const Json& j) {
  StagePlan p;
  auto read = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const Json::exception&) {
      throw ConfigError(key, "wrong type");
    }
  };
  read("name", p.name);
  read("peak_lr", p.peak_lr);
  read("warmup_ratio", p.warmup_ratio);
  read("max_steps", p.max_steps);
  read("batch", p.batch);
  read("eval_every", p.eval_every);
  read("early_stop_patience", p.early_stop_patience);
  return p;
}

Json to_json(const MetricRecord& r) {
  return Json{{"stage", r.stage},           {"step", r.step},
              {"lr", r.lr},                 {"train_loss", r.train_loss},
              {"eval_loss", r.eval_loss},   {"eval_accuracy", r.eval_accuracy},
              {"trainable_fraction", r.trainable_fraction}};
}

template <typename T>
std::uint64_t trainable_parameters(const ModelParams<T>& params) {
  std::uint64_t n = 0;
  for (const auto& name : params.trainable) {
    const auto& m = params.tensor(name);
    if (params.new_rows_only && (name == "embed" || name == "head")) {
      n += static_cast<std::uint64_t>(params.partition.new_count()) * static_cast<std::uint64_t>(m.cols());
    } else {
      n += static_cast<std::uint64_t>(m.size());
    }
  }
  return n;
}

template <typename T>
double apply_stage_mask(ModelParams<T>& params, const std::string& plan_name) {
  const auto& names = stage_names();
  if (std::find(names.begin(), names.end(), plan_name) == names.end()) {
    throw ConfigError("name", "unknown stage plan '" + plan_name + "'");
  }
  if (plan_name == "lora_all" && params.adapters.empty()) throw StateError("lora_all requires attached adapters");
  if ((plan_name == "odd_layers" || plan_name == "even_layers") && params.config.layers < 2) {
    throw ConfigError("name", plan_name + " needs at least 2 layers");
  }
  params.trainable.clear();
  params.new_rows_only = false;
  const auto all = params.tensor_names();
  auto block_parity = [](const std::string& name) -> int {
    if (name.rfind("blocks.", 0) != 0 || name.find(".lora_") != std::string::npos) return -1;
    return std::stoi(name.substr(7)) % 2;
  };
  for (const auto& name : all) {
    bool on = false;
    if (plan_name == "full") {
      on = true;
    } else if (plan_name == "embed_head" || plan_name == "new_embed_head") {
      on = name == "embed" || name == "head";
    } else if (plan_name == "odd_layers") {
      on = block_parity(name) == 1;
    } else if (plan_name == "even_layers") {
      on = block_parity(name) == 0;
    } else if (plan_name == "lora_all") {
      on = name.find(".lora_") != std::string::npos;
    }
    if (on) params.trainable.insert(name);
  }
  params.new_rows_only = plan_name == "new_embed_head";
  return static_cast<double>(trainable_parameters(params)) / static_cast<double>(params.total_parameters());
}

template <typename T>
StageResult train_stage(ModelParams<T>& params, const std::vector<Sample>& train, const std::vector<Sample>& eval,
                        const StagePlan& plan, const StageOptions& options) {
  validate(plan);
  StageResult result;
  result.trainable_fraction = apply_stage_mask(params, plan.name);
  if (plan.max_steps == 0) return result;

  BatchStream stream(train, plan.batch, options.seed);
  AdamW<T> opt(options.optimizer);
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  double loss_sum = 0.0;
  std::int64_t loss_count = 0;
  for (std::int64_t step = 0; step < plan.max_steps; ++step) {
    const double lr = cosine_lr(step, plan.max_steps, plan.warmup_ratio, plan.peak_lr);
    auto lg = backward(params, stream.next());
    if (!std::isfinite(lg.loss)) {
      if (options.diagnostic_checkpoint) save_checkpoint(*options.diagnostic_checkpoint, params, step);
      throw DataError(fmt::format("stage {}: non-finite loss at step {}", plan.name, step));
    }
    opt.step(params, lg.grads, lr);
    loss_sum += lg.loss;
    ++loss_count;
    result.steps_run = step + 1;

    const bool last = step + 1 == plan.max_steps;
    if ((step + 1) % plan.eval_every == 0 || last) {
      const EvalResult ev = evaluate(params, eval);
      result.timeline.push_back({plan.name, step + 1, lr, loss_sum / static_cast<double>(loss_count), ev.loss,
                                 ev.accuracy, result.trainable_fraction});
      loss_sum = 0.0;
      loss_count = 0;
      if (ev.loss < best) {
        best = ev.loss;
        stale = 0;
      } else if (plan.early_stop_patience > 0 && ++stale >= plan.early_stop_patience && !last) {
        result.early_stopped = true;
        break;
      }
    }
  }
  return result;
}

template double apply_stage_mask<float>(ModelParams<float>&, const std::string&);
template double apply_stage_mask<double>(ModelParams<double>&, const std::string&);
template std::uint64_t trainable_parameters<float>(const ModelParams<float>&);
template std::uint64_t trainable_parameters<double>(const ModelParams<double>&);
template StageResult train_stage<float>(ModelParams<float>&, const std::vector<Sample>&, const std::vector<Sample>&,
                                        const StagePlan&, const StageOptions&);
template StageResult train_stage<double>(ModelParams<double>&, const std::vector<Sample>&, const std::vector<Sample>&,
                                         const StagePlan&, const StageOptions&);

}  // namespace langadapt::train
