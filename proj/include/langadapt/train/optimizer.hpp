// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "langadapt/train/transformer.hpp"

namespace langadapt::train {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  /// Global gradient-norm clip; 0 disables.
  double max_grad_norm = 1.0;
};

/// Decoupled-weight-decay Adam over named tensors.
///
/// Norm gains are not decayed. Under a row mask only rows
/// [partition.base_rows, V) of embed/head are touched, moments included.
template <typename T>
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  /// One update of every tensor present in `grads`. Returns the pre-clip
  /// global gradient norm.
  double step(ModelParams<T>& params, const Gradients<T>& grads, double lr);

  std::int64_t steps() const { return t_; }

 private:
  struct Moments {
    Matrix<T> m, v;
  };
  AdamWConfig cfg_;
  std::map<std::string, Moments> state_;
  std::int64_t t_ = 0;
};

}  // namespace langadapt::train
