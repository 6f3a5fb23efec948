// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "langadapt/common/io.hpp"
#include "langadapt/orchestrator/ops.hpp"

namespace langadapt::orchestrator {

std::string toolkit_version();

struct RunStep {
  std::string name;
  std::string op;
  Json params = Json::object();
};

/// A run file:
///   {"seed": 7, "run_dir": "runs", "pipeline": [{"name": ..., "op": ..., "params": {...}}]}
/// Path parameters may name an earlier step's output as "@step" (its primary
/// output) or "@step:file". Relative paths resolve against the config file's
/// directory.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path run_dir = "runs";
  std::vector<RunStep> steps;
};

/// Throws ConfigError on structural problems (missing pipeline, bad types).
RunConfig parse_run_config(const Json& j);
Json to_json(const RunConfig& cfg);

/// sha256 of the canonical form of {seed, pipeline}; run_dir is excluded so a
/// config names the same run wherever it is placed.
std::string config_hash(const RunConfig& cfg);

/// run_dir / first 16 hex digits of the config hash.
std::filesystem::path run_root(const RunConfig& cfg, const std::filesystem::path& base_dir);

/// Output directory of step `index`: "<index:02d>-<name>".
std::filesystem::path step_dir(const std::filesystem::path& root, std::size_t index, const RunStep& step);

struct Validation {
  std::vector<ConfigIssue> issues;
  /// Per step: params with refs and relative paths resolved.
  std::vector<Json> resolved;

  bool ok() const { return issues.empty(); }
};

/// Checks every step without executing anything; all issues are collected.
Validation validate(const RunConfig& cfg, const std::filesystem::path& base_dir);

struct RunOutcome {
  std::filesystem::path root;
  Json manifest;
  bool ok = false;
  int failed_step = -1;
};

/// Validates, locks the run root, runs the steps in order and writes
/// manifest.json after each one. A step failure stops the run with the
/// manifest marked failed (the outcome is returned, not thrown). Throws
/// ConfigError if validation fails and StateError if the run is locked.
RunOutcome execute(const RunConfig& cfg, const std::filesystem::path& base_dir);

/// Reads and parses a config file; its directory is the base for relative paths.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace langadapt::orchestrator
