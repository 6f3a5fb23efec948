// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "langadapt/init/embedding.hpp"
#include "langadapt/tokenizer/subword_model.hpp"

namespace langadapt::init {

enum class InitVariant { kRandom, kAvgE, kDecompE, kAvgEH, kDecompEH };

const std::vector<InitVariant>& all_variants();
std::string to_string(InitVariant v);
/// Accepts random, avg_E, decomp_E, avg_EH, decomp_EH. Throws ConfigError.
InitVariant parse_variant(std::string_view name);

struct InitMethod {
  InitVariant variant = InitVariant::kRandom;
  double random_scale = 0.02;
  /// Averaging draws from N(mean, 1e-5 * cov) instead of using the mean.
  bool sampled = false;
};

/// Base-token ids of a piece: the base tokenizer's encoding. Throws DataError
/// on an empty piece.
std::vector<int> decompose_piece(std::string_view piece, const tokenizer::SubwordModel& base);

struct ExtendReport {
  /// New pieces whose decomposition was all unk; they were initialised by averaging.
  std::vector<std::string> avg_fallback;
};

struct Extended {
  MatrixF embed;
  MatrixF head;
  VocabPartition partition;
  ExtendReport report;
};

/// Grows E and H to the merged vocabulary. Pretrained rows are copied
/// bit-exactly; new rows follow the method:
///   random     E', H' ~ N(0, random_scale^2)
///   avg_E      E' = column mean of E;                H' random
///   decomp_E   E' = mean of E over the decomposition; H' random
///   avg_EH     E', H' = column means of E and H
///   decomp_EH  E', H' = decomposition means of E and H
/// Unk components are dropped when any other component exists.
/// Throws DataError if the merged vocabulary does not extend the base with
/// preserved ids, or if the matrix shapes do not match the base tokenizer.
Extended extend_vocab(const MatrixF& embed, const MatrixF& head, const tokenizer::SubwordModel& base,
                      const tokenizer::SubwordModel& merged, const InitMethod& method, std::uint64_t seed);

}  // namespace langadapt::init
