// SPDX-License-Identifier: Apache-2.0
#include "langadapt/train/model.hpp"

#include <cmath>

#include <fmt/format.h>

#include "langadapt/common/error.hpp"
#include "langadapt/common/hash.hpp"
#include "langadapt/common/rng.hpp"

namespace langadapt::train {
namespace {

template <typename T>
Matrix<T> normal_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
  Matrix<T> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.normal(0.0, stddev));
  return m;
}

// "blocks.3.wq" -> (3, "wq"); returns false if the name is not a block tensor.
bool split_block_name(const std::string& name, int& layer, std::string& rest) {
  if (name.rfind("blocks.", 0) != 0) return false;
  const auto dot = name.find('.', 7);
  if (dot == std::string::npos) return false;
  layer = std::stoi(name.substr(7, dot - 7));
  rest = name.substr(dot + 1);
  return true;
}

}  // namespace

int ModelConfig::ffn_dim() const { return static_cast<int>(std::lround(ffn_mult * dim)); }

void validate(const ModelConfig& cfg) {
  if (cfg.vocab < 1) throw ConfigError("vocab", "must be >= 1");
  if (cfg.dim < 2) throw ConfigError("dim", "must be >= 2");
  if (cfg.heads < 1) throw ConfigError("heads", "must be >= 1");
  if (cfg.dim % cfg.heads != 0) throw ConfigError("heads", fmt::format("{} does not divide dim {}", cfg.heads, cfg.dim));
  if (cfg.head_dim() % 2 != 0) throw ConfigError("heads", "head dimension must be even for rotary positions");
  if (cfg.layers < 1) throw ConfigError("layers", "must be >= 1");
  if (cfg.context < 2) throw ConfigError("context", "must be >= 2");
  if (!(cfg.ffn_mult > 0.0) || cfg.ffn_dim() < 1) throw ConfigError("ffn_mult", "must give a positive FFN width");
  if (!(cfg.norm_eps > 0.0)) throw ConfigError("norm_eps", "must be positive");
  if (!(cfg.rope_base > 1.0)) throw ConfigError("rope_base", "must be > 1");
  if (!(cfg.init_std > 0.0)) throw ConfigError("init_std", "must be positive");
}

Json to_json(const ModelConfig& cfg) {
  return Json{{"vocab", cfg.vocab},       {"dim", cfg.dim},           {"layers", cfg.layers},
              {"heads", cfg.heads},       {"ffn_mult", cfg.ffn_mult}, {"context", cfg.context},
              {"norm_eps", cfg.norm_eps}, {"rope_base", cfg.rope_base}, {"init_std", cfg.init_std}};
}

ModelConfig model_config_from_json(const Json& j) {
  ModelConfig cfg;
  auto read = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const Json::exception&) {
      throw ConfigError(key, "wrong type");
    }
  };
  read("vocab", cfg.vocab);
  read("dim", cfg.dim);
  read("layers", cfg.layers);
  read("heads", cfg.heads);
  read("ffn_mult", cfg.ffn_mult);
  read("context", cfg.context);
  read("norm_eps", cfg.norm_eps);
  read("rope_base", cfg.rope_base);
  read("init_std", cfg.init_std);
  return cfg;
}

std::uint64_t parameter_count(const ModelConfig& cfg) {
  const std::uint64_t v = cfg.vocab, d = cfg.dim, f = cfg.ffn_dim(), l = cfg.layers;
  return 2 * v * d + l * (4 * d * d + 3 * f * d + 2 * d) + d;
}

const std::vector<std::string>& projection_names() {
  static const std::vector<std::string> names = {"wq", "wk", "wv", "wo", "w_gate", "w_up", "w_down"};
  return names;
}

template <typename T>
Matrix<T>& Block<T>::projection(const std::string& name) {
  return const_cast<Matrix<T>&>(std::as_const(*this).projection(name));
}

template <typename T>
const Matrix<T>& Block<T>::projection(const std::string& name) const {
  if (name == "wq") return wq;
  if (name == "wk") return wk;
  if (name == "wv") return wv;
  if (name == "wo") return wo;
  if (name == "w_gate") return w_gate;
  if (name == "w_up") return w_up;
  if (name == "w_down") return w_down;
  if (name == "attn_norm") return attn_norm;
  if (name == "ffn_norm") return ffn_norm;
  throw DataError("unknown block tensor '" + name + "'");
}

template <typename T>
std::vector<std::string> ModelParams<T>::tensor_names() const {
  std::vector<std::string> names = {"embed"};
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    names.push_back(fmt::format("blocks.{}.attn_norm", l));
    for (const auto& p : projection_names()) {
      if (p == "w_gate") names.push_back(fmt::format("blocks.{}.ffn_norm", l));
      names.push_back(fmt::format("blocks.{}.{}", l, p));
    }
  }
  names.push_back("final_norm");
  names.push_back("head");
  for (const auto& [key, ad] : adapters) {
    names.push_back(key + ".lora_a");
    names.push_back(key + ".lora_b");
  }
  return names;
}

template <typename T>
Matrix<T>& ModelParams<T>::tensor(const std::string& name) {
  return const_cast<Matrix<T>&>(std::as_const(*this).tensor(name));
}

template <typename T>
const Matrix<T>& ModelParams<T>::tensor(const std::string& name) const {
  if (name == "embed") return embed;
  if (name == "head") return head;
  if (name == "final_norm") return final_norm;
  for (const char* suffix : {".lora_a", ".lora_b"}) {
    const std::string s = suffix;
    if (name.size() > s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0) {
      const auto it = adapters.find(name.substr(0, name.size() - s.size()));
      if (it == adapters.end()) break;
      return s == ".lora_a" ? it->second.a : it->second.b;
    }
  }
  int layer = 0;
  std::string rest;
  if (split_block_name(name, layer, rest) && layer >= 0 && layer < static_cast<int>(blocks.size())) {
    return blocks[layer].projection(rest);
  }
  throw DataError("unknown tensor '" + name + "'");
}

template <typename T>
std::uint64_t ModelParams<T>::total_parameters() const {
  std::uint64_t n = 0;
  for (const auto& name : tensor_names()) n += static_cast<std::uint64_t>(tensor(name).size());
  return n;
}

template <typename T>
ModelParams<T> build_model(const ModelConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  Rng rng(seed);
  const int d = cfg.dim, f = cfg.ffn_dim();
  ModelParams<T> p;
  p.config = cfg;
  p.embed = normal_matrix<T>(rng, cfg.vocab, d, cfg.init_std);
  p.blocks.resize(cfg.layers);
  for (auto& b : p.blocks) {
    b.attn_norm = Matrix<T>::Ones(1, d);
    b.wq = normal_matrix<T>(rng, d, d, cfg.init_std);
    b.wk = normal_matrix<T>(rng, d, d, cfg.init_std);
    b.wv = normal_matrix<T>(rng, d, d, cfg.init_std);
    b.wo = normal_matrix<T>(rng, d, d, cfg.init_std);
    b.ffn_norm = Matrix<T>::Ones(1, d);
    b.w_gate = normal_matrix<T>(rng, f, d, cfg.init_std);
    b.w_up = normal_matrix<T>(rng, f, d, cfg.init_std);
    b.w_down = normal_matrix<T>(rng, d, f, cfg.init_std);
  }
  p.final_norm = Matrix<T>::Ones(1, d);
  p.head = normal_matrix<T>(rng, cfg.vocab, d, cfg.init_std);
  p.partition = {static_cast<std::size_t>(cfg.vocab), static_cast<std::size_t>(cfg.vocab)};
  for (const auto& n : p.tensor_names()) p.trainable.insert(n);
  return p;
}

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& src) {
  ModelParams<To> p;
  p.config = src.config;
  p.embed = src.embed.template cast<To>();
  p.blocks.resize(src.blocks.size());
  for (std::size_t l = 0; l < src.blocks.size(); ++l) {
    for (const char* n : {"attn_norm", "ffn_norm"}) p.blocks[l].projection(n) = src.blocks[l].projection(n).template cast<To>();
    for (const auto& n : projection_names()) p.blocks[l].projection(n) = src.blocks[l].projection(n).template cast<To>();
  }
  p.final_norm = src.final_norm.template cast<To>();
  p.head = src.head.template cast<To>();
  for (const auto& [k, ad] : src.adapters) p.adapters[k] = {ad.a.template cast<To>(), ad.b.template cast<To>()};
  p.lora = src.lora;
  p.partition = src.partition;
  p.trainable = src.trainable;
  p.new_rows_only = src.new_rows_only;
  return p;
}

template <typename T>
std::string tensor_hash(const Matrix<T>& m) {
  return sha256_hex(std::string_view(reinterpret_cast<const char*>(m.data()), m.size() * sizeof(T)));
}

template struct Block<float>;
template struct Block<double>;
template struct ModelParams<float>;
template struct ModelParams<double>;
template ModelParams<float> build_model<float>(const ModelConfig&, std::uint64_t);
template ModelParams<double> build_model<double>(const ModelConfig&, std::uint64_t);
template ModelParams<double> cast_params<double, float>(const ModelParams<float>&);
template ModelParams<float> cast_params<float, double>(const ModelParams<double>&);
template std::string tensor_hash<float>(const Matrix<float>&);
template std::string tensor_hash<double>(const Matrix<double>&);

}  // namespace langadapt::train
