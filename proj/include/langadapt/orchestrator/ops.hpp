// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "langadapt/common/io.hpp"

namespace langadapt::orchestrator {

struct ConfigIssue {
  int step = -1;  // -1 for run-level fields
  std::string field;
  std::string message;
};

std::string to_string(const ConfigIssue& issue);

enum class ParamKind {
  kString,
  kPath,       // existing file (or an artifact promised by an earlier step)
  kPathList,
  kInt,
  kReal,
  kBool,
  kJson,       // structured block: object or array
  kIntList,
  kStringList,
};

struct ParamDoc {
  std::string key;
  ParamKind kind = ParamKind::kString;
  std::string help;
  bool required = false;
};

/// Typed access to one step's parameters. Problems are collected, not
/// thrown, so validation can report all of them; getters return the
/// default after recording an issue.
class ParamReader {
 public:
  ParamReader(const Json& params, const std::vector<ParamDoc>& docs, int step,
              const std::set<std::filesystem::path>* promised = nullptr);

  bool has(const std::string& key) const;
  std::string str(const std::string& key, const std::string& def = "");
  std::int64_t integer(const std::string& key, std::int64_t def = 0);
  double real(const std::string& key, double def = 0.0);
  bool boolean(const std::string& key, bool def = false);
  Json json(const std::string& key, const Json& def = Json());
  std::vector<std::int64_t> int_list(const std::string& key);
  std::vector<std::string> str_list(const std::string& key);
  std::filesystem::path path(const std::string& key);
  std::vector<std::filesystem::path> paths(const std::string& key);

  /// Records an issue unless `ok`.
  void check(bool ok, const std::string& field, const std::string& message);
  /// Runs `fn`, turning a ConfigError into an issue.
  void guard(const std::function<void()>& fn);

  const std::vector<ConfigIssue>& issues() const { return issues_; }
  /// Every path parameter read, in order (inputs of the step).
  const std::vector<std::filesystem::path>& inputs() const { return inputs_; }
  /// Throws ConfigError for the first issue, if any.
  void throw_if_issues() const;

 private:
  const Json* find(const std::string& key);
  const ParamDoc* doc(const std::string& key) const;
  std::filesystem::path checked_path(const std::string& field, const Json& value);

  const Json& params_;
  const std::vector<ParamDoc>& docs_;
  int step_;
  const std::set<std::filesystem::path>* promised_;
  std::vector<ConfigIssue> issues_;
  std::vector<std::filesystem::path> inputs_;
};

struct OpContext {
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;  // default seed for the step
};

struct OpSpec {
  std::string name;
  std::string summary;
  std::vector<ParamDoc> params;
  /// Files written into out_dir; the first is the primary artifact.
  std::vector<std::string> outputs;
  /// Reads and checks every parameter without touching artifacts.
  std::function<void(ParamReader&)> check;
  /// Executes; returns a small JSON summary. Throws on failure.
  std::function<Json(ParamReader&, const OpContext&)> run;
};

const std::vector<OpSpec>& op_table();
/// nullptr for an unknown name.
const OpSpec* find_op(std::string_view name);

/// Checks and runs one op, writing its outputs under ctx.out_dir.
Json run_op(const OpSpec& op, const Json& params, const OpContext& ctx);

}  // namespace langadapt::orchestrator
