// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "langadapt/tokenizer/subword_model.hpp"

namespace langadapt::tokenizer {

struct MergeResult {
  SubwordModel model;
  /// Pieces of `added` already present in `base`, by exact string
  /// (the shared control pieces included).
  std::size_t overlap = 0;
};

/// Hybrid tokenizer: every base piece keeps its id; pieces only in `added`
/// are appended in their original order. Appended normal-piece scores are
/// mapped affinely from the added model's normal-score range onto the base
/// model's, which preserves their relative order.
MergeResult merge(const SubwordModel& base, const SubwordModel& added);

}  // namespace langadapt::tokenizer
