// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "langadapt/train/model.hpp"

namespace langadapt::train {

/// B token sequences of equal length T (2 <= T <= context). Position t
/// predicts token t + 1, so each sequence contributes T - 1 predictions.
using Batch = std::vector<std::vector<int>>;

template <typename T>
struct ForwardResult {
  double loss = 0.0;      // mean cross-entropy over predictions
  double accuracy = 0.0;  // mean argmax credit (1/k when the target ties k maxima)
  std::size_t predictions = 0;
  Matrix<T> logits;       // (B*T) x V, filled only when requested
};

template <typename T>
using Gradients = std::map<std::string, Matrix<T>>;

template <typename T>
struct LossGrad {
  double loss = 0.0;
  double accuracy = 0.0;
  /// Only trainable tensors appear. Frozen rows of a row-masked embed/head are zero.
  Gradients<T> grads;
};

/// Pre-norm decoder: RMSNorm, rotary causal attention, SwiGLU FFN, untied
/// embed/head. Throws DataError on ragged batches or out-of-range ids.
template <typename T>
ForwardResult<T> forward_loss(const ModelParams<T>& params, const Batch& batch, bool keep_logits = false);

template <typename T>
LossGrad<T> backward(const ModelParams<T>& params, const Batch& batch);

}  // namespace langadapt::train
