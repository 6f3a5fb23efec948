// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "langadapt/common/io.hpp"
#include "langadapt/common/rng.hpp"

namespace langadapt::orchestrator {

/// Template grammar for a small English-like and a small Korean-like
/// language. Korean particles follow the final-consonant rule (이/가, 은/는,
/// 을/를), so the text has structure a toy model can pick up.
std::string english_sentence(Rng& rng);
std::string korean_sentence(Rng& rng);
std::string english_document(Rng& rng, int sentences);
std::string korean_document(Rng& rng, int sentences);
/// Alternates Korean and English sentences, starting with Korean.
std::string mixed_document(Rng& rng, int sentences);

struct SynthConfig {
  std::uint64_t seed = 0;
  int english_docs = 120;
  int korean_docs = 240;
  int mixed_docs = 40;
  int min_sentences = 3;
  int max_sentences = 8;
  /// Copies of earlier Korean documents with one word swapped.
  int near_duplicates = 24;
  /// Boilerplate, character runs and too-short documents.
  int noise_docs = 24;

  /// Text for pretraining the base model: mostly English with some Korean.
  int base_english_docs = 300;
  int base_korean_docs = 75;
  int base_sentences = 5;
  /// Held-out mixed-language documents for evaluation.
  int eval_docs = 40;
  int eval_sentences = 6;
};

struct SynthDoc {
  std::string text;
  std::string source;  // "en", "ko", "mixed", "dup" or "noise"
};

/// Seeded bilingual raw corpus for demos and tests. Deterministic.
std::vector<SynthDoc> synth_corpus(const SynthConfig& cfg);

struct SynthBundle {
  std::vector<SynthDoc> raw;  // synth_corpus(cfg)
  std::vector<SynthDoc> base;
  std::vector<SynthDoc> eval;
};

/// raw, base and eval draw from independent streams of cfg.seed.
SynthBundle synth_bundle(const SynthConfig& cfg);

/// Line-delimited records {"text", "source"} suitable for ingest.
std::vector<Json> synth_records(const std::vector<SynthDoc>& docs);

}  // namespace langadapt::orchestrator
