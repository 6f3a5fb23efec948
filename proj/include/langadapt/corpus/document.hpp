// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "langadapt/common/io.hpp"

namespace langadapt::corpus {

struct Document {
  std::string id;
  std::string text;
  std::string source;
  std::size_t byte_len = 0;

  bool operator==(const Document&) const = default;
};

using Corpus = std::vector<Document>;

/// "<ordinal, 8 digits>-<first 12 hex of sha256(text)>".
std::string make_document_id(std::size_t ordinal, std::string_view text);
Document make_document(std::size_t ordinal, std::string text, std::string source);

Json to_json(const Document& doc);
/// Throws DataError if a field is missing or byte_len disagrees with text.
Document document_from_json(const Json& j);

/// Corpus store: one JSON record per line with id, text, source, byte_len.
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);
Corpus load_corpus(const std::filesystem::path& path);

std::vector<std::string> texts(const Corpus& corpus);
std::size_t total_bytes(const Corpus& corpus);

}  // namespace langadapt::corpus
