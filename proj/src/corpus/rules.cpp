// SPDX-License-Identifier: Apache-2.0
#include "langadapt/corpus/rules.hpp"

#include <optional>
#include <regex>

#include <unicode/uchar.h>
#include <unicode/uscript.h>

#include "langadapt/common/error.hpp"
#include "langadapt/common/utf8.hpp"

namespace langadapt::corpus {
namespace {

UScriptCode script_code(const std::string& name) {
  const int code = u_getPropertyValueEnum(UCHAR_SCRIPT, name.c_str());
  if (code == UCHAR_INVALID_CODE) throw ConfigError("script", "unknown script '" + name + "'");
  return static_cast<UScriptCode>(code);
}

std::vector<std::regex> compile(const std::vector<std::string>& patterns) {
  std::vector<std::regex> out;
  for (const auto& p : patterns) {
    try {
      out.emplace_back(p, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw ConfigError("patterns", "bad regex '" + p + "': " + e.what());
    }
  }
  return out;
}

bool any_line_matches(const std::string& text, const std::vector<std::regex>& res) {
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    for (const auto& re : res) {
      if (std::regex_search(line, re)) return true;
    }
    start = end + 1;
  }
  return false;
}

}  // namespace

const std::vector<std::string>& rule_names() {
  static const std::vector<std::string> names = {"min_len", "max_len", "max_foreign_ratio", "max_char_run",
                                                 "boilerplate"};
  return names;
}

void validate(const std::vector<Rule>& rules) {
  for (const auto& r : rules) {
    if (r.name == "min_len" || r.name == "max_len" || r.name == "max_char_run") {
      if (!(r.value >= 0.0)) throw ConfigError(r.name, "value must be >= 0");
    } else if (r.name == "max_foreign_ratio") {
      if (!(r.value >= 0.0 && r.value <= 1.0)) throw ConfigError(r.name, "value must be in [0, 1]");
      script_code(r.script);
    } else if (r.name == "boilerplate") {
      compile(r.patterns);
    } else {
      throw ConfigError("rule", "unknown rule '" + r.name + "'");
    }
  }
}

Json to_json(const Rule& rule) {
  Json j{{"rule", rule.name}};
  if (rule.name == "boilerplate") {
    j["patterns"] = rule.patterns;
  } else {
    j["value"] = rule.value;
  }
  if (rule.name == "max_foreign_ratio") j["script"] = rule.script;
  return j;
}

Rule rule_from_json(const Json& j) {
  Rule r;
  try {
    r.name = j.at("rule").get<std::string>();
    r.value = j.value("value", 0.0);
    r.script = j.value("script", std::string("Hangul"));
    r.patterns = j.value("patterns", std::vector<std::string>{});
  } catch (const Json::exception& e) {
    throw ConfigError("rule", e.what());
  }
  return r;
}

double foreign_ratio(const std::string& text, const std::string& script) {
  const UScriptCode target = script_code(script);
  std::size_t letters = 0, foreign = 0;
  for (const char32_t cp : utf8::decode(text)) {
    if (!u_isalpha(static_cast<UChar32>(cp))) continue;
    ++letters;
    UErrorCode status = U_ZERO_ERROR;
    if (uscript_getScript(static_cast<UChar32>(cp), &status) != target) ++foreign;
  }
  return letters == 0 ? 0.0 : static_cast<double>(foreign) / static_cast<double>(letters);
}

std::size_t longest_char_run(const std::string& text) {
  std::size_t best = 0, run = 0;
  char32_t prev = 0;
  for (const char32_t cp : utf8::decode(text)) {
    run = (run > 0 && cp == prev) ? run + 1 : 1;
    prev = cp;
    best = std::max(best, run);
  }
  return best;
}

Json to_json(const RuleReport& r) {
  Json per_rule = Json::array();
  for (const auto& [name, n] : r.rejected) per_rule.push_back({{"rule", name}, {"rejected", n}});
  Json rej = Json::array();
  for (const auto& [id, rule] : r.rejections) rej.push_back({{"id", id}, {"rule", rule}});
  return Json{{"kept", r.kept}, {"per_rule", per_rule}, {"rejections", rej}};
}

RuleResult rule_filter(const Corpus& corpus, const std::vector<Rule>& rules) {
  validate(rules);
  std::vector<std::vector<std::regex>> regexes;
  for (const auto& r : rules) regexes.push_back(r.name == "boilerplate" ? compile(r.patterns) : std::vector<std::regex>{});

  RuleResult out;
  for (const auto& r : rules) out.report.rejected.emplace_back(r.name, 0);
  for (const auto& doc : corpus) {
    std::optional<std::size_t> failed;
    for (std::size_t i = 0; i < rules.size() && !failed; ++i) {
      const auto& r = rules[i];
      bool pass = true;
      if (r.name == "min_len") {
        pass = static_cast<double>(doc.byte_len) >= r.value;
      } else if (r.name == "max_len") {
        pass = static_cast<double>(doc.byte_len) <= r.value;
      } else if (r.name == "max_foreign_ratio") {
        pass = foreign_ratio(doc.text, r.script) <= r.value;
      } else if (r.name == "max_char_run") {
        pass = static_cast<double>(longest_char_run(doc.text)) <= r.value;
      } else if (r.name == "boilerplate") {
        pass = !any_line_matches(doc.text, regexes[i]);
      }
      if (!pass) failed = i;
    }
    if (failed) {
      ++out.report.rejected[*failed].second;
      out.report.rejections.emplace_back(doc.id, rules[*failed].name);
    } else {
      out.corpus.push_back(doc);
    }
  }
  out.report.kept = out.corpus.size();
  return out;
}

}  // namespace langadapt::corpus
