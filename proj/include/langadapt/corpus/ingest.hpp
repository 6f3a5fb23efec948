// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "langadapt/corpus/document.hpp"

namespace langadapt::corpus {

enum class IngestFormat {
  kPlainText,  // one document per file
  kJsonl,      // one record per line with a "text" field and optional "source"
};

IngestFormat parse_ingest_format(const std::string& name);  // "text" / "jsonl"

struct IngestReport {
  std::size_t files = 0;
  std::size_t records = 0;
  std::size_t accepted = 0;
  std::size_t invalid_utf8 = 0;
  std::size_t missing_text = 0;
  std::size_t malformed = 0;
  std::size_t empty = 0;  // nothing left after normalization

  std::size_t rejected() const { return invalid_utf8 + missing_text + malformed + empty; }
};

Json to_json(const IngestReport& r);

struct IngestResult {
  Corpus corpus;
  IngestReport report;
};

/// Normalizes to NFC and trims trailing whitespace; nothing else. Ordinals
/// count accepted documents in input order. A file's source label defaults
/// to its stem. Throws IoError for an unreadable file.
IngestResult ingest(const std::vector<std::filesystem::path>& paths, IngestFormat format);

}  // namespace langadapt::corpus
