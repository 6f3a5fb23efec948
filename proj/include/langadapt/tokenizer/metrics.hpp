// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "langadapt/tokenizer/subword_model.hpp"
#include "langadapt/tokenizer/unigram_trainer.hpp"

namespace langadapt::tokenizer {

std::uint64_t count_tokens(const SubwordModel& model, std::span<const std::string> texts);

struct ComplexityReport {
  std::size_t vocab_size = 0;
  double ric = 0.0;  // token count, new / base
  double rec = 0.0;  // embedding parameters, new / base
};

/// Throws DataError if the base tokenizer produces no tokens.
ComplexityReport complexity_ratios(const SubwordModel& candidate, const SubwordModel& base,
                                   std::span<const std::string> texts, std::size_t embed_dim);

struct SweepRow {
  std::size_t size = 0;  // trained vocabulary size before merging
  ComplexityReport merged;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  /// Index into rows of the knee point, or rows.size() - 1 when no marginal
  /// improvement falls below the cutoff.
  std::size_t knee = 0;
};

struct SweepConfig {
  std::vector<std::size_t> sizes;  // ascending
  std::size_t embed_dim = 128;
  /// Train once at max(sizes) and prune down; false retrains per size.
  bool nested = true;
  UnigramTrainerConfig trainer;
};

/// Trains (or prunes) an adaptation vocabulary per size, merges each with
/// `base` and reports RIC/REC of the merged tokenizer.
SweepResult vocab_sweep(std::span<const std::string> texts, const SubwordModel& base, const SweepConfig& config);

/// First i >= 1 whose RIC drop per 1000 added pieces, measured from row i-1,
/// is below 10% of the drop between rows 0 and 1. Returns rows.size() - 1 if
/// none qualifies and 0 for fewer than two rows.
std::size_t knee_index(const std::vector<SweepRow>& rows);

/// Tab-separated: size, merged_vocab, ric, rec, knee (0/1).
std::string sweep_table(const SweepResult& result);

/// Count per token id over the encodings of `texts`.
std::vector<std::uint64_t> token_histogram(const SubwordModel& model, std::span<const std::string> texts);

/// Tab-separated: id, piece, count.
std::string histogram_table(const SubwordModel& model, const std::vector<std::uint64_t>& counts);

struct NamedCorpus {
  std::string name;
  std::vector<std::string> texts;
};

struct TokenRatioReport {
  std::vector<std::pair<std::string, double>> per_dataset;
  double average_tr = 0.0;
};

/// Throws DataError naming the dataset when the base tokenizer yields no tokens.
TokenRatioReport token_ratio(const SubwordModel& candidate, const SubwordModel& base,
                             const std::vector<NamedCorpus>& datasets);

}  // namespace langadapt::tokenizer
