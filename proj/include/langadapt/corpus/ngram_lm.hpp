// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "langadapt/corpus/document.hpp"

namespace langadapt::corpus {

/// Begin-of-text sentinel: contexts at the start of a document are padded
/// with order - 1 copies. Outside the Unicode range, so it never collides.
inline constexpr char32_t kBosUnit = 0x110000;

/// Character-level n-gram LM with interpolated add-k smoothing:
///
///   P_1(u)   = (c(u) + k) / (C + k*V)
///   P_m(u|h) = (c(h,u) + k*V*P_{m-1}(u|h')) / (c(h) + k*V)
///
/// where h' drops the oldest unit of h, and V counts the distinct training
/// units plus one shared class for every unseen unit. Each level is a proper
/// distribution over those V outcomes.
class NgramLM {
 public:
  /// Throws ConfigError if order < 1 or k <= 0, DataError on an empty corpus.
  static NgramLM train(std::span<const std::string> texts, int order, double k);
  /// Order-1 model with no counts: every unit has probability 1 / v.
  static NgramLM uniform(std::size_t v);

  int order() const { return order_; }
  double k() const { return k_; }
  std::size_t vocab_size() const { return vocab_size_; }
  bool known(char32_t unit) const;

  /// P(unit | context); only the last order-1 units of `context` are used.
  double prob(std::u32string_view context, char32_t unit) const;

  Json to_json() const;
  static NgramLM from_json(const Json& j);
  void save(const std::filesystem::path& path) const;
  static NgramLM load(const std::filesystem::path& path);

  bool operator==(const NgramLM&) const = default;

 private:
  struct ContextCounts {
    std::uint64_t total = 0;
    std::map<char32_t, std::uint64_t> next;
    bool operator==(const ContextCounts&) const = default;
  };

  int order_ = 1;
  double k_ = 1.0;
  std::size_t vocab_size_ = 1;
  std::vector<char32_t> units_;  // sorted training units
  /// counts_[m - 1] holds contexts of length m - 1.
  std::vector<std::map<std::u32string, ContextCounts>> counts_;
};

struct PerplexityScore {
  std::string doc_id;
  double ppl = 0.0;
  std::size_t unit_count = 0;
};

/// ppl = exp(-(1/T) * sum_t log P(u_t | previous units, BOS-padded)).
/// Throws DataError on empty text.
PerplexityScore perplexity(const NgramLM& lm, const Document& doc);

}  // namespace langadapt::corpus
