// SPDX-License-Identifier: Apache-2.0
#include "langadapt/tokenizer/metrics.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "langadapt/common/error.hpp"
#include "langadapt/common/io.hpp"
#include "langadapt/tokenizer/merge.hpp"

namespace langadapt::tokenizer {

std::uint64_t count_tokens(const SubwordModel& model, std::span<const std::string> texts) {
  std::uint64_t n = 0;
  for (const auto& t : texts) n += model.encode(t).size();
  return n;
}

ComplexityReport complexity_ratios(const SubwordModel& candidate, const SubwordModel& base,
                                   std::span<const std::string> texts, std::size_t embed_dim) {
  if (embed_dim == 0) throw ConfigError("embed_dim", "must be positive");
  const std::uint64_t base_tokens = count_tokens(base, texts);
  if (base_tokens == 0) throw DataError("base tokenizer produced zero tokens on the corpus");
  const std::uint64_t new_tokens = count_tokens(candidate, texts);
  ComplexityReport r;
  r.vocab_size = candidate.size();
  r.ric = static_cast<double>(new_tokens) / static_cast<double>(base_tokens);
  r.rec = static_cast<double>(candidate.size() * embed_dim) / static_cast<double>(base.size() * embed_dim);
  return r;
}

std::size_t knee_index(const std::vector<SweepRow>& rows) {
  if (rows.size() < 2) return 0;
  auto marginal = [&](std::size_t i) {
    const double added = static_cast<double>(rows[i].size) - static_cast<double>(rows[i - 1].size);
    if (added <= 0) return 0.0;
    return (rows[i - 1].merged.ric - rows[i].merged.ric) / added * 1000.0;
  };
  const double first = marginal(1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (marginal(i) < 0.1 * first) return i;
  }
  return rows.size() - 1;
}

SweepResult vocab_sweep(std::span<const std::string> texts, const SubwordModel& base, const SweepConfig& config) {
  if (config.sizes.empty()) throw ConfigError("sizes", "must be non-empty");
  if (!std::is_sorted(config.sizes.begin(), config.sizes.end())) throw ConfigError("sizes", "must be ascending");
  const std::size_t floor = coverage_floor(texts, config.trainer.byte_fallback);
  for (std::size_t s : config.sizes) {
    if (s < floor) throw ConfigError("sizes", fmt::format("size {} is below the coverage floor {}", s, floor));
  }

  SubwordModel largest;
  if (config.nested) {
    UnigramTrainerConfig cfg = config.trainer;
    cfg.target_vocab = config.sizes.back();
    largest = train_unigram(texts, cfg);
  }
  SweepResult result;
  for (std::size_t s : config.sizes) {
    SubwordModel trained;
    if (config.nested) {
      trained = prune_to_size(largest, s);
    } else {
      UnigramTrainerConfig cfg = config.trainer;
      cfg.target_vocab = s;
      trained = train_unigram(texts, cfg);
    }
    const SubwordModel merged = merge(base, trained).model;
    result.rows.push_back({s, complexity_ratios(merged, base, texts, config.embed_dim)});
  }
  result.knee = knee_index(result.rows);
  return result;
}

std::string sweep_table(const SweepResult& result) {
  std::string out = "size\tmerged_vocab\tric\trec\tknee\n";
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& r = result.rows[i];
    out += fmt::format("{}\t{}\t{}\t{}\t{}\n", r.size, r.merged.vocab_size, format_double(r.merged.ric),
                       format_double(r.merged.rec), i == result.knee ? 1 : 0);
  }
  return out;
}

std::vector<std::uint64_t> token_histogram(const SubwordModel& model, std::span<const std::string> texts) {
  std::vector<std::uint64_t> counts(model.size(), 0);
  for (const auto& t : texts)
    for (int id : model.encode(t)) ++counts[id];
  return counts;
}

std::string histogram_table(const SubwordModel& model, const std::vector<std::uint64_t>& counts) {
  std::string out = "id\tpiece\tcount\n";
  for (std::size_t id = 0; id < counts.size(); ++id) {
    out += fmt::format("{}\t{}\t{}\n", id, escape_piece(model.piece(static_cast<int>(id)).text), counts[id]);
  }
  return out;
}

TokenRatioReport token_ratio(const SubwordModel& candidate, const SubwordModel& base,
                             const std::vector<NamedCorpus>& datasets) {
  if (datasets.empty()) throw ConfigError("datasets", "must be non-empty");
  TokenRatioReport report;
  double sum = 0.0;
  for (const auto& ds : datasets) {
    const std::uint64_t b = count_tokens(base, ds.texts);
    if (b == 0) throw DataError(fmt::format("dataset '{}': base tokenizer produced zero tokens", ds.name));
    const double tr = static_cast<double>(count_tokens(candidate, ds.texts)) / static_cast<double>(b);
    report.per_dataset.emplace_back(ds.name, tr);
    sum += tr;
  }
  report.average_tr = sum / static_cast<double>(datasets.size());
  return report;
}

}  // namespace langadapt::tokenizer
