// SPDX-License-Identifier: Apache-2.0
#include "langadapt/init/compare.hpp"

#include <fmt/format.h>

#include "langadapt/common/error.hpp"
#include "langadapt/common/io.hpp"
#include "langadapt/train/data.hpp"

namespace langadapt::init {

train::ModelParams<float> assemble(const train::ModelParams<float>& base_model, const Extended& ext) {
  train::ModelParams<float> p = base_model;
  p.embed = ext.embed;
  p.head = ext.head;
  p.config.vocab = static_cast<int>(ext.embed.rows());
  p.partition = ext.partition;
  return p;
}

CompareResult init_compare(const train::ModelParams<float>& base_model, const tokenizer::SubwordModel& base_tok,
                           const tokenizer::SubwordModel& merged_tok, std::span<const std::string> eval_texts,
                           const std::vector<InitMethod>& methods, const std::vector<std::uint64_t>& seeds) {
  if (static_cast<std::size_t>(base_model.config.vocab) != base_tok.size()) {
    throw DataError(fmt::format("base model vocab {} does not match the base tokenizer ({} pieces)",
                                base_model.config.vocab, base_tok.size()));
  }
  if (methods.empty()) throw ConfigError("methods", "must be non-empty");
  if (seeds.empty()) throw ConfigError("seeds", "must be non-empty");
  const auto samples = train::pack_samples(merged_tok, eval_texts, base_model.config.context);
  if (samples.empty()) throw DataError("eval texts are shorter than one context window");

  CompareResult result;
  for (const auto& m : methods) {
    CompareSummary sum{to_string(m.variant) + (m.sampled ? "_sampled" : "")};
    for (std::uint64_t seed : seeds) {
      const Extended ext = extend_vocab(base_model.embed, base_model.head, base_tok, merged_tok, m, seed);
      const auto ev = train::evaluate(assemble(base_model, ext), samples);
      result.rows.push_back({sum.method, seed, ev.loss, ev.accuracy});
      sum.mean_loss += ev.loss;
      sum.mean_accuracy += ev.accuracy;
    }
    sum.mean_loss /= static_cast<double>(seeds.size());
    sum.mean_accuracy /= static_cast<double>(seeds.size());
    result.summary.push_back(sum);
  }
  return result;
}

std::string compare_table(const CompareResult& result) {
  std::string out = "method\tloss\taccuracy\n";
  for (const auto& s : result.summary) {
    out += fmt::format("{}\t{}\t{}\n", s.method, format_double(s.mean_loss), format_double(s.mean_accuracy));
  }
  return out;
}

}  // namespace langadapt::init
