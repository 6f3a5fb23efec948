// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "langadapt/tokenizer/subword_model.hpp"

namespace langadapt::tokenizer {

struct UnigramTrainerConfig {
  /// Total vocabulary size, control and byte pieces included.
  std::size_t target_vocab = 8000;
  /// Seed pool size as a multiple of target_vocab.
  double seed_vocab_multiplier = 4.0;
  /// Fraction of the vocabulary removed per pruning round.
  double prune_fraction = 0.2;
  /// Longest candidate piece, in codepoints.
  std::size_t max_piece_len = 16;
  /// EM sub-iterations per round.
  int em_iterations = 2;
  bool byte_fallback = false;
};

/// Unique pretokenized segments with counts, sorted by segment.
///
/// Text is split in front of every whitespace codepoint, so a segment is
/// either "word" or "<ws>word"; whitespace never occurs inside a piece
/// except as its first codepoint.
using SegmentCounts = std::vector<std::pair<std::string, std::uint64_t>>;
SegmentCounts count_segments(std::span<const std::string> texts);

/// Smallest legal target: control pieces, byte pieces if enabled, and one
/// piece per distinct codepoint of the corpus.
std::size_t coverage_floor(std::span<const std::string> texts, bool byte_fallback);

/// Expected piece counts under the model's unigram distribution
/// (forward-backward over each segment lattice, weighted by segment count).
/// Indexed by token id; only normal pieces receive mass.
std::vector<double> expected_piece_counts(const SubwordModel& model, const SegmentCounts& segments);

/// Trains a unigram-LM vocabulary: frequent-substring seeding, EM, and
/// loss-ranked pruning until target_vocab. Single-codepoint pieces are never
/// pruned. Deterministic. Throws ConfigError if the target is below the
/// coverage floor or above what the corpus can support.
SubwordModel train_unigram(std::span<const std::string> texts, const UnigramTrainerConfig& config);

/// Keeps control, byte and single-codepoint pieces plus the highest-scoring
/// multi-codepoint pieces so that the result has exactly `size` pieces.
/// Nested: prune_to_size(m, a) is a subset of prune_to_size(m, b) for a <= b.
SubwordModel prune_to_size(const SubwordModel& model, std::size_t size);

}  // namespace langadapt::tokenizer
