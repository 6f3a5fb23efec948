// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "langadapt/common/io.hpp"
#include "langadapt/init/embedding.hpp"

namespace langadapt::train {

struct ModelConfig {
  int vocab = 0;
  int dim = 128;
  int layers = 6;
  int heads = 4;
  double ffn_mult = 8.0 / 3.0;
  int context = 128;
  double norm_eps = 1e-5;
  double rope_base = 10000.0;
  double init_std = 0.02;

  /// Hidden width of the gated FFN: round(ffn_mult * dim).
  int ffn_dim() const;
  int head_dim() const { return dim / heads; }
};

/// Throws ConfigError naming the offending field.
void validate(const ModelConfig& cfg);
Json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const Json& j);

/// Closed form: 2*V*d (embed + head) + L*(4*d^2 + 3*f*d + 2*d) + d.
std::uint64_t parameter_count(const ModelConfig& cfg);

struct LoraConfig {
  int rank = 8;
  double alpha = 16.0;
  /// Projection names inside a block; empty means all seven.
  std::set<std::string> targets;

  double scale() const { return alpha / rank; }
};

/// Names of the seven per-block projections.
const std::vector<std::string>& projection_names();

template <typename T>
struct Block {
  Matrix<T> attn_norm;  // 1 x d
  Matrix<T> wq, wk, wv, wo;  // d x d (out x in)
  Matrix<T> ffn_norm;  // 1 x d
  Matrix<T> w_gate, w_up;  // f x d
  Matrix<T> w_down;  // d x f

  Matrix<T>& projection(const std::string& name);
  const Matrix<T>& projection(const std::string& name) const;
};

template <typename T>
struct Adapter {
  Matrix<T> a;  // r x in
  Matrix<T> b;  // out x r
};

template <typename T>
struct ModelParams {
  ModelConfig config;
  Matrix<T> embed;  // V x d
  std::vector<Block<T>> blocks;
  Matrix<T> final_norm;  // 1 x d
  Matrix<T> head;  // V x d

  /// Keyed by "blocks.<l>.<proj>".
  std::map<std::string, Adapter<T>> adapters;
  std::optional<LoraConfig> lora;

  init::VocabPartition partition;
  /// Names of trainable tensors (see tensor_names()).
  std::set<std::string> trainable;
  /// When set, only rows [partition.base_rows, V) of embed and head update.
  bool new_rows_only = false;

  /// Every tensor name in a fixed order, adapters included.
  std::vector<std::string> tensor_names() const;
  Matrix<T>& tensor(const std::string& name);
  const Matrix<T>& tensor(const std::string& name) const;
  std::uint64_t total_parameters() const;
};

/// Seeded init: N(0, init_std^2) for embed, head and projections; ones for norms.
/// All tensors trainable; partition covers every row as pretrained.
template <typename T>
ModelParams<T> build_model(const ModelConfig& cfg, std::uint64_t seed);

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& p);

/// SHA-256 of a tensor's raw bytes.
template <typename T>
std::string tensor_hash(const Matrix<T>& m);

}  // namespace langadapt::train
