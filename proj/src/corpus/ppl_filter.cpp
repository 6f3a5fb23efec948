// SPDX-License-Identifier: Apache-2.0
#include "langadapt/corpus/ppl_filter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "langadapt/common/error.hpp"

namespace langadapt::corpus {
namespace {

// Linear interpolation between closest ranks.
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

PplMode parse_ppl_mode(const std::string& name) {
  if (name == "absolute") return PplMode::kAbsolute;
  if (name == "percentile") return PplMode::kPercentile;
  throw ConfigError("mode", "expected 'absolute' or 'percentile', got '" + name + "'");
}

std::string to_string(PplMode mode) { return mode == PplMode::kAbsolute ? "absolute" : "percentile"; }

void validate_ppl_filter(PplMode mode, double value) {
  if (mode == PplMode::kAbsolute && !(value > 0.0)) throw ConfigError("value", "absolute cutoff must be > 0");
  if (mode == PplMode::kPercentile && !(value > 0.0 && value <= 100.0)) {
    throw ConfigError("value", "percentile must be in (0, 100]");
  }
}

Json to_json(const PplReport& r) {
  Json scores = Json::array();
  for (const auto& s : r.scores) scores.push_back({{"id", s.doc_id}, {"ppl", s.ppl}, {"units", s.unit_count}});
  Json j{{"kept", r.kept},
         {"dropped", r.dropped},
         {"summary",
          {{"min", r.summary.min},
           {"p25", r.summary.p25},
           {"median", r.summary.median},
           {"p75", r.summary.p75},
           {"max", r.summary.max},
           {"mean", r.summary.mean}}},
         {"scores", scores},
         {"warnings", r.warnings}};
  j["cutoff"] = r.cutoff ? Json(*r.cutoff) : Json(nullptr);
  return j;
}

PplResult ppl_filter(const Corpus& corpus, const NgramLM& lm, PplMode mode, double value) {
  validate_ppl_filter(mode, value);
  PplResult out;
  auto& rep = out.report;
  if (corpus.empty()) {
    rep.warnings.push_back("empty corpus");
    return out;
  }
  for (const auto& d : corpus) rep.scores.push_back(perplexity(lm, d));

  std::vector<std::size_t> rank(corpus.size());
  std::iota(rank.begin(), rank.end(), 0);
  std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = rep.scores[a];
    const auto& y = rep.scores[b];
    return x.ppl != y.ppl ? x.ppl < y.ppl : x.doc_id < y.doc_id;
  });

  std::vector<bool> keep(corpus.size(), false);
  if (mode == PplMode::kAbsolute) {
    rep.cutoff = value;
    for (std::size_t i = 0; i < corpus.size(); ++i) keep[i] = rep.scores[i].ppl <= value;
  } else {
    const double want = std::ceil(value / 100.0 * static_cast<double>(corpus.size()) - 1e-9);
    const auto k = std::min(corpus.size(), static_cast<std::size_t>(std::max(0.0, want)));
    for (std::size_t r = 0; r < k; ++r) keep[rank[r]] = true;
    if (k > 0) rep.cutoff = rep.scores[rank[k - 1]].ppl;
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (keep[i]) out.corpus.push_back(corpus[i]);
  }
  rep.kept = out.corpus.size();
  rep.dropped = corpus.size() - rep.kept;

  std::vector<double> sorted;
  for (const std::size_t i : rank) sorted.push_back(rep.scores[i].ppl);
  rep.summary = {sorted.front(),
                 quantile(sorted, 0.25),
                 quantile(sorted, 0.5),
                 quantile(sorted, 0.75),
                 sorted.back(),
                 std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size())};
  return out;
}

}  // namespace langadapt::corpus
