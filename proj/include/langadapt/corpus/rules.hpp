// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "langadapt/corpus/document.hpp"

namespace langadapt::corpus {

/// One predicate from the built-in set:
///   min_len / max_len       byte length bounds (value)
///   max_foreign_ratio       share of letters outside `script` (value in [0, 1])
///   max_char_run            longest run of one repeated codepoint (value)
///   boilerplate             reject if any line matches one of `patterns` (ECMAScript regex)
struct Rule {
  std::string name;
  double value = 0.0;
  std::string script = "Hangul";
  std::vector<std::string> patterns;
};

const std::vector<std::string>& rule_names();

/// Throws ConfigError for unknown names, bad values, unknown scripts or bad regexes.
void validate(const std::vector<Rule>& rules);
Json to_json(const Rule& rule);
/// {"rule": name, "value": v, "script": s, "patterns": [...]}
Rule rule_from_json(const Json& j);

/// Letters (Unicode alphabetic) whose script differs from `script`, over all
/// letters; 0 for text without letters.
double foreign_ratio(const std::string& text, const std::string& script);
std::size_t longest_char_run(const std::string& text);

struct RuleReport {
  /// Rejections per rule, in rule order. A document counts against the
  /// first rule it fails.
  std::vector<std::pair<std::string, std::size_t>> rejected;
  std::vector<std::pair<std::string, std::string>> rejections;  // (doc id, rule)
  std::size_t kept = 0;
};

Json to_json(const RuleReport& r);

struct RuleResult {
  Corpus corpus;
  RuleReport report;
};

/// Keeps a document iff it passes every rule.
RuleResult rule_filter(const Corpus& corpus, const std::vector<Rule>& rules);

}  // namespace langadapt::corpus
