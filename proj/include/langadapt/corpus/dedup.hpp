// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "langadapt/corpus/document.hpp"

namespace langadapt::corpus {

struct DedupConfig {
  int shingle_n = 5;  // codepoints per shingle
  int num_hashes = 128;
  int bands = 16;
  double jaccard_threshold = 0.8;
  std::uint64_t seed = 1;  // hash-family seed
};

void validate(const DedupConfig& cfg);
Json to_json(const DedupConfig& cfg);
DedupConfig dedup_config_from_json(const Json& j);

/// Distinct 64-bit hashes of the codepoint n-grams of `text`; empty when the
/// text is shorter than n.
std::vector<std::uint64_t> shingles(const std::string& text, int n);
double exact_jaccard(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b);

/// MinHash with universal hashing (a*x + b mod 2^61 - 1) per permutation.
class MinHasher {
 public:
  explicit MinHasher(const DedupConfig& cfg);
  std::vector<std::uint64_t> signature(const std::vector<std::uint64_t>& shingle_set) const;
  /// Fraction of equal signature slots.
  static double estimate(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b);

 private:
  std::vector<std::uint64_t> a_, b_;
};

struct DedupCluster {
  std::string kept;  // earliest member in corpus order
  std::vector<std::string> members;  // corpus order, kept first
  std::vector<double> similarity;  // estimated Jaccard of each member to `kept`
};

struct DedupReport {
  std::vector<DedupCluster> clusters;  // only clusters with more than one member
  std::vector<std::string> too_short;  // shorter than shingle_n: kept as singletons
  std::size_t candidate_pairs = 0;
  std::size_t removed = 0;
};

Json to_json(const DedupReport& r);

struct DedupResult {
  Corpus corpus;
  DedupReport report;
};

/// LSH banding proposes candidate pairs; a pair is linked when its estimated
/// Jaccard reaches the threshold; clusters are the connected components and
/// the earliest document of each survives. Throws DataError on an empty corpus.
DedupResult dedup(const Corpus& corpus, const DedupConfig& cfg);

}  // namespace langadapt::corpus
