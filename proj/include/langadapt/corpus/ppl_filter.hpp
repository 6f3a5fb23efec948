// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "langadapt/corpus/ngram_lm.hpp"

namespace langadapt::corpus {

enum class PplMode {
  kAbsolute,   // keep ppl <= value
  kPercentile, // keep the lowest value% of documents
};

PplMode parse_ppl_mode(const std::string& name);  // "absolute" / "percentile"
std::string to_string(PplMode mode);

/// Throws ConfigError: absolute needs value > 0, percentile needs 0 < value <= 100.
void validate_ppl_filter(PplMode mode, double value);

struct PplSummary {
  double min = 0.0, p25 = 0.0, median = 0.0, p75 = 0.0, max = 0.0, mean = 0.0;
};

struct PplReport {
  std::vector<PerplexityScore> scores;  // corpus order
  std::optional<double> cutoff;  // unset for an empty corpus
  std::size_t kept = 0;
  std::size_t dropped = 0;
  PplSummary summary;
  std::vector<std::string> warnings;
};

Json to_json(const PplReport& r);

struct PplResult {
  Corpus corpus;
  PplReport report;
};

/// Percentile mode ranks documents by (ppl, id) and keeps the first
/// ceil(value / 100 * N); the cutoff is the last kept score. Output keeps
/// corpus order.
PplResult ppl_filter(const Corpus& corpus, const NgramLM& lm, PplMode mode, double value);

}  // namespace langadapt::corpus
