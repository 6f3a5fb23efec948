// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "langadapt/tokenizer/subword_model.hpp"

namespace langadapt::tokenizer {

struct CodepointRange {
  char32_t lo = 0;
  char32_t hi = 0;  // inclusive
};

struct ManualPiece {
  std::string piece;
  /// Only "tail" is defined: score = (lowest normal score) - 1.
  std::string score_policy = "tail";
};

struct PieceFilterRules {
  /// Empty means every codepoint is allowed.
  std::vector<CodepointRange> allowed_ranges;
  std::uint64_t min_corpus_freq = 0;
  /// In codepoints; 0 disables the check.
  std::size_t max_piece_len = 0;
  std::vector<std::string> manual_deny;
  std::vector<ManualPiece> manual_add;
};

struct RefineReport {
  std::vector<std::string> removed_by_range;
  std::vector<std::string> removed_by_length;
  std::vector<std::string> removed_by_deny;
  std::vector<std::string> removed_by_frequency;
  std::vector<std::string> added;
  std::vector<std::string> add_collisions;
};

struct RefineResult {
  SubwordModel model;
  RefineReport report;
};

/// Throws ConfigError on overlapping/inverted ranges or an unknown score policy.
void validate_rules(const PieceFilterRules& rules);

/// Drops multi-codepoint normal pieces that violate the rules, then appends
/// manual pieces. Control, byte and single-codepoint pieces always survive.
/// Frequencies are piece counts in the Viterbi encoding of `corpus` under the
/// model left after the range/length/deny filters.
RefineResult refine_pieces(const SubwordModel& model, const PieceFilterRules& rules,
                           std::span<const std::string> corpus);

}  // namespace langadapt::tokenizer
