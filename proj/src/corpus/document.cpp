// SPDX-License-Identifier: Apache-2.0
#include "langadapt/corpus/document.hpp"

#include <set>

#include <fmt/format.h>

#include "langadapt/common/error.hpp"
#include "langadapt/common/hash.hpp"

namespace langadapt::corpus {

std::string make_document_id(std::size_t ordinal, std::string_view text) {
  return fmt::format("{:08d}-{}", ordinal, sha256_hex(text).substr(0, 12));
}

Document make_document(std::size_t ordinal, std::string text, std::string source) {
  Document d;
  d.id = make_document_id(ordinal, text);
  d.byte_len = text.size();
  d.text = std::move(text);
  d.source = std::move(source);
  return d;
}

Json to_json(const Document& doc) {
  return Json{{"id", doc.id}, {"text", doc.text}, {"source", doc.source}, {"byte_len", doc.byte_len}};
}

Document document_from_json(const Json& j) {
  Document d;
  try {
    d.id = j.at("id").get<std::string>();
    d.text = j.at("text").get<std::string>();
    d.source = j.value("source", std::string());
    d.byte_len = j.at("byte_len").get<std::size_t>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed document record: ") + e.what());
  }
  if (d.byte_len != d.text.size()) throw DataError("document " + d.id + ": byte_len does not match text");
  return d;
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::vector<Json> records;
  records.reserve(corpus.size());
  for (const auto& d : corpus) records.push_back(to_json(d));
  write_jsonl(path, records);
}

Corpus load_corpus(const std::filesystem::path& path) {
  Corpus out;
  std::set<std::string> seen;
  for (const auto& j : read_jsonl(path)) {
    out.push_back(document_from_json(j));
    if (!seen.insert(out.back().id).second) throw DataError(path.string() + ": duplicate id " + out.back().id);
  }
  return out;
}

std::vector<std::string> texts(const Corpus& corpus) {
  std::vector<std::string> out;
  out.reserve(corpus.size());
  for (const auto& d : corpus) out.push_back(d.text);
  return out;
}

std::size_t total_bytes(const Corpus& corpus) {
  std::size_t n = 0;
  for (const auto& d : corpus) n += d.byte_len;
  return n;
}

}  // namespace langadapt::corpus
