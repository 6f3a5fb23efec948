// SPDX-License-Identifier: Apache-2.0
#include "langadapt/train/lora.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "langadapt/common/error.hpp"
#include "langadapt/common/rng.hpp"

namespace langadapt::train {
namespace {

std::vector<std::string> resolve_targets(const LoraConfig& cfg) {
  const auto& all = projection_names();
  if (cfg.targets.empty()) return all;
  for (const auto& t : cfg.targets) {
    if (std::find(all.begin(), all.end(), t) == all.end()) throw ConfigError("lora.targets", "unknown projection '" + t + "'");
  }
  std::vector<std::string> out;
  for (const auto& name : all)
    if (cfg.targets.count(name)) out.push_back(name);
  return out;
}

std::pair<int, int> projection_shape(const ModelConfig& m, const std::string& name) {
  const int d = m.dim, f = m.ffn_dim();
  if (name == "w_gate" || name == "w_up") return {f, d};
  if (name == "w_down") return {d, f};
  return {d, d};
}

}  // namespace

std::uint64_t lora_parameter_count(const ModelConfig& model, const LoraConfig& cfg) {
  std::uint64_t n = 0;
  for (const auto& t : resolve_targets(cfg)) {
    const auto [out, in] = projection_shape(model, t);
    n += static_cast<std::uint64_t>(cfg.rank) * (in + out);
  }
  return n * static_cast<std::uint64_t>(model.layers);
}

template <typename T>
void lora_attach(ModelParams<T>& params, const LoraConfig& cfg, std::uint64_t seed) {
  if (!params.adapters.empty()) throw StateError("LoRA adapters are already attached");
  if (cfg.rank < 1) throw ConfigError("lora.rank", "must be >= 1");
  if (!(cfg.alpha > 0.0)) throw ConfigError("lora.alpha", "must be positive");
  const auto targets = resolve_targets(cfg);
  for (const auto& t : targets) {
    const auto [out, in] = projection_shape(params.config, t);
    if (cfg.rank > std::min(out, in)) {
      throw ConfigError("lora.rank", fmt::format("{} exceeds min dimension {} of {}", cfg.rank, std::min(out, in), t));
    }
  }
  Rng rng(seed);
  for (int l = 0; l < params.config.layers; ++l) {
    for (const auto& t : targets) {
      const auto [out, in] = projection_shape(params.config, t);
      Adapter<T> ad;
      ad.a.resize(cfg.rank, in);
      for (Eigen::Index i = 0; i < ad.a.size(); ++i) ad.a.data()[i] = static_cast<T>(rng.normal(0.0, params.config.init_std));
      ad.b = Matrix<T>::Zero(out, cfg.rank);
      const std::string key = fmt::format("blocks.{}.{}", l, t);
      params.adapters.emplace(key, std::move(ad));
      params.trainable.insert(key + ".lora_a");
      params.trainable.insert(key + ".lora_b");
    }
  }
  params.lora = cfg;
}

template <typename T>
void lora_merge(ModelParams<T>& params) {
  if (params.adapters.empty()) throw StateError("no LoRA adapters attached");
  const T s = static_cast<T>(params.lora->scale());
  for (const auto& [key, ad] : params.adapters) {
    params.tensor(key).noalias() += s * (ad.b * ad.a);
    params.trainable.erase(key + ".lora_a");
    params.trainable.erase(key + ".lora_b");
  }
  params.adapters.clear();
  params.lora.reset();
}

template void lora_attach<float>(ModelParams<float>&, const LoraConfig&, std::uint64_t);
template void lora_attach<double>(ModelParams<double>&, const LoraConfig&, std::uint64_t);
template void lora_merge<float>(ModelParams<float>&);
template void lora_merge<double>(ModelParams<double>&);

}  // namespace langadapt::train
