// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "langadapt/common/rng.hpp"
#include "langadapt/tokenizer/subword_model.hpp"
#include "langadapt/train/transformer.hpp"

namespace langadapt::train {

using Sample = std::vector<int>;

/// Encodes every text, concatenates the ids (no separators) and cuts the
/// stream into samples of exactly `context` tokens; the remainder is dropped.
std::vector<Sample> pack_samples(const tokenizer::SubwordModel& tok, std::span<const std::string> texts, int context);

/// Seed-determined batch order: each epoch is a Fisher-Yates shuffle of the
/// samples; batches never straddle epochs (a short final batch is skipped
/// unless it is the only one).
class BatchStream {
 public:
  BatchStream(const std::vector<Sample>& samples, int batch_size, std::uint64_t seed);
  Batch next();

 private:
  void reshuffle();

  const std::vector<Sample>& samples_;
  std::size_t batch_size_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::size_t predictions = 0;
};

/// Mean cross-entropy and argmax accuracy over every prediction of every
/// sample. Throws DataError on an empty sample set.
template <typename T>
EvalResult evaluate(const ModelParams<T>& params, const std::vector<Sample>& samples, int batch_size = 16);

template <typename T>
EvalResult evaluate_clm(const ModelParams<T>& params, std::span<const std::string> texts,
                        const tokenizer::SubwordModel& tok);

}  // namespace langadapt::train
