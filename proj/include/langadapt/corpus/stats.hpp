// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "langadapt/corpus/document.hpp"
#include "langadapt/tokenizer/subword_model.hpp"

namespace langadapt::corpus {

struct CorpusStats {
  std::size_t documents = 0;
  std::size_t bytes = 0;
  std::uint64_t tokens = 0;   // zero without a tokenizer
  std::uint64_t samples = 0;  // floor(tokens / context)
};

Json to_json(const CorpusStats& s);

/// Token counts pack documents back to back into context-sized samples with
/// the remainder dropped, matching the trainer's packing.
CorpusStats corpus_stats(const Corpus& corpus, const tokenizer::SubwordModel* tok = nullptr, int context = 128);
/// Same arithmetic from a known token total.
std::uint64_t packed_samples(std::uint64_t tokens, int context);

}  // namespace langadapt::corpus
