// SPDX-License-Identifier: Apache-2.0
#include "langadapt/corpus/ingest.hpp"

#include <sstream>

#include "langadapt/common/error.hpp"
#include "langadapt/common/utf8.hpp"

namespace langadapt::corpus {

IngestFormat parse_ingest_format(const std::string& name) {
  if (name == "text") return IngestFormat::kPlainText;
  if (name == "jsonl") return IngestFormat::kJsonl;
  throw ConfigError("format", "expected 'text' or 'jsonl', got '" + name + "'");
}

Json to_json(const IngestReport& r) {
  return Json{{"files", r.files},          {"records", r.records},         {"accepted", r.accepted},
              {"invalid_utf8", r.invalid_utf8}, {"missing_text", r.missing_text}, {"malformed", r.malformed},
              {"empty", r.empty}};
}

IngestResult ingest(const std::vector<std::filesystem::path>& paths, IngestFormat format) {
  IngestResult out;
  auto& rep = out.report;
  auto accept = [&](const std::string& raw, const std::string& source) {
    if (!utf8::is_valid(raw)) {
      ++rep.invalid_utf8;
      return;
    }
    std::string text = utf8::trim_trailing(utf8::nfc(raw));
    if (text.empty()) {
      ++rep.empty;
      return;
    }
    out.corpus.push_back(make_document(out.corpus.size(), std::move(text), source));
    ++rep.accepted;
  };

  for (const auto& path : paths) {
    const std::string content = read_file(path);
    const std::string stem = path.stem().string();
    ++rep.files;
    if (format == IngestFormat::kPlainText) {
      ++rep.records;
      accept(content, stem);
      continue;
    }
    std::istringstream in(content);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      ++rep.records;
      if (!utf8::is_valid(line)) {
        ++rep.invalid_utf8;
        continue;
      }
      Json j;
      try {
        j = Json::parse(line);
      } catch (const Json::parse_error&) {
        ++rep.malformed;
        continue;
      }
      if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
        ++rep.missing_text;
        continue;
      }
      const auto src = j.contains("source") && j["source"].is_string() ? j["source"].get<std::string>() : stem;
      accept(j["text"].get<std::string>(), src);
    }
  }
  return out;
}

}  // namespace langadapt::corpus
