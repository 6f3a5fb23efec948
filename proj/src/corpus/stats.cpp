// SPDX-License-Identifier: Apache-2.0
#include "langadapt/corpus/stats.hpp"

#include "langadapt/common/error.hpp"

namespace langadapt::corpus {

Json to_json(const CorpusStats& s) {
  return Json{{"documents", s.documents}, {"bytes", s.bytes}, {"tokens", s.tokens}, {"samples", s.samples}};
}

std::uint64_t packed_samples(std::uint64_t tokens, int context) {
  if (context < 1) throw ConfigError("context", "must be >= 1");
  return tokens / static_cast<std::uint64_t>(context);
}

CorpusStats corpus_stats(const Corpus& corpus, const tokenizer::SubwordModel* tok, int context) {
  CorpusStats s;
  s.documents = corpus.size();
  s.bytes = total_bytes(corpus);
  if (tok != nullptr) {
    for (const auto& d : corpus) s.tokens += tok->encode(d.text).size();
    s.samples = packed_samples(s.tokens, context);
  }
  return s;
}

}  // namespace langadapt::corpus
