// SPDX-License-Identifier: Apache-2.0
#include "langadapt/orchestrator/run.hpp"

#include <chrono>
#include <cstdio>
#include <map>
#include <regex>

#include <fmt/format.h>

#include "langadapt/common/error.hpp"
#include "langadapt/common/hash.hpp"
#include "langadapt/common/rng.hpp"

namespace langadapt::orchestrator {

namespace fs = std::filesystem;

std::string toolkit_version() { return LANGADAPT_VERSION; }

RunConfig parse_run_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("config", "must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "seed" && key != "run_dir" && key != "pipeline") throw ConfigError(key, "unknown field");
  }
  RunConfig cfg;
  if (j.contains("seed")) {
    const auto& s = j["seed"];
    if (!s.is_number_integer() || s.get<std::int64_t>() < 0) throw ConfigError("seed", "must be a non-negative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  if (j.contains("run_dir")) {
    if (!j["run_dir"].is_string()) throw ConfigError("run_dir", "must be a path");
    cfg.run_dir = j["run_dir"].get<std::string>();
  }
  if (!j.contains("pipeline") || !j["pipeline"].is_array()) throw ConfigError("pipeline", "must be a list of steps");
  for (std::size_t i = 0; i < j["pipeline"].size(); ++i) {
    const auto& s = j["pipeline"][i];
    const std::string where = fmt::format("pipeline[{}]", i);
    if (!s.is_object()) throw ConfigError(where, "must be an object");
    for (const auto& [key, value] : s.items()) {
      if (key != "name" && key != "op" && key != "params") throw ConfigError(where + "." + key, "unknown field");
    }
    RunStep step;
    if (!s.contains("op") || !s["op"].is_string()) throw ConfigError(where + ".op", "must be a string");
    step.op = s["op"].get<std::string>();
    step.name = step.op;
    if (s.contains("name")) {
      if (!s["name"].is_string()) throw ConfigError(where + ".name", "must be a string");
      step.name = s["name"].get<std::string>();
    }
    if (s.contains("params")) {
      if (!s["params"].is_object()) throw ConfigError(where + ".params", "must be an object");
      step.params = s["params"];
    }
    cfg.steps.push_back(std::move(step));
  }
  return cfg;
}

namespace {

Json pipeline_json(const RunConfig& cfg) {
  Json steps = Json::array();
  for (const auto& s : cfg.steps) steps.push_back({{"name", s.name}, {"op", s.op}, {"params", s.params}});
  return steps;
}

}  // namespace

Json to_json(const RunConfig& cfg) {
  return Json{{"seed", cfg.seed}, {"run_dir", cfg.run_dir.string()}, {"pipeline", pipeline_json(cfg)}};
}

std::string config_hash(const RunConfig& cfg) {
  return sha256_hex(canonical_json(Json{{"seed", cfg.seed}, {"pipeline", pipeline_json(cfg)}}));
}

fs::path run_root(const RunConfig& cfg, const fs::path& base_dir) {
  fs::path dir = cfg.run_dir.is_absolute() ? cfg.run_dir : base_dir / cfg.run_dir;
  return (dir / config_hash(cfg).substr(0, 16)).lexically_normal();
}

fs::path step_dir(const fs::path& root, std::size_t index, const RunStep& step) {
  return root / fmt::format("{:02d}-{}", index, step.name);
}

RunConfig load_run_config(const fs::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError("config", fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_run_config(j);
}

namespace {

bool is_path_kind(ParamKind k) { return k == ParamKind::kPath || k == ParamKind::kPathList; }

}  // namespace

Validation validate(const RunConfig& cfg, const fs::path& base_dir) {
  static const std::regex kName("[A-Za-z0-9_.-]+");
  Validation v;
  const fs::path root = run_root(cfg, base_dir);
  std::set<fs::path> promised;
  std::map<std::string, std::size_t> seen;

  for (std::size_t i = 0; i < cfg.steps.size(); ++i) {
    const auto& step = cfg.steps[i];
    const int idx = static_cast<int>(i);
    Json resolved = step.params;
    v.resolved.push_back(resolved);

    if (!std::regex_match(step.name, kName)) v.issues.push_back({idx, "name", "must match [A-Za-z0-9_.-]+"});
    const bool duplicate = seen.count(step.name) > 0;
    if (duplicate) v.issues.push_back({idx, "name", "duplicate step name '" + step.name + "'"});

    const OpSpec* op = find_op(step.op);
    if (op == nullptr) {
      v.issues.push_back({idx, "op", "unknown op '" + step.op + "'"});
      if (!duplicate) seen.emplace(step.name, i);
      continue;
    }

    const auto resolve = [&](const std::string& key, Json& value) {
      if (!value.is_string()) return;  // the reader reports the type
      const std::string s = value.get<std::string>();
      if (s.empty() || s[0] != '@') {
        const fs::path p = s;
        if (!s.empty() && p.is_relative()) value = (base_dir / p).lexically_normal().string();
        return;
      }
      const auto colon = s.find(':');
      const std::string ref = s.substr(1, colon == std::string::npos ? std::string::npos : colon - 1);
      const auto it = seen.find(ref);
      if (it == seen.end()) {
        v.issues.push_back({idx, key, "'" + s + "' does not name an earlier step"});
        promised.insert(s);  // reported once
        return;
      }
      const OpSpec* src = find_op(cfg.steps[it->second].op);
      const std::string file = colon == std::string::npos ? src->outputs.front() : s.substr(colon + 1);
      if (std::find(src->outputs.begin(), src->outputs.end(), file) == src->outputs.end()) {
        v.issues.push_back({idx, key, "step '" + ref + "' (" + src->name + ") has no output '" + file + "'"});
        promised.insert(s);
        return;
      }
      value = (step_dir(root, it->second, cfg.steps[it->second]) / file).string();
    };
    if (resolved.is_object()) {
      for (const auto& d : op->params) {
        if (!is_path_kind(d.kind) || !resolved.contains(d.key)) continue;
        Json& value = resolved[d.key];
        if (value.is_array()) {
          for (auto& x : value) resolve(d.key, x);
        } else {
          resolve(d.key, value);
        }
      }
    }
    v.resolved.back() = resolved;

    ParamReader reader(v.resolved.back(), op->params, idx, &promised);
    op->check(reader);
    v.issues.insert(v.issues.end(), reader.issues().begin(), reader.issues().end());

    if (!duplicate) seen.emplace(step.name, i);
    for (const auto& out : op->outputs) promised.insert(step_dir(root, i, step) / out);
  }
  return v;
}

namespace {

class RunLock {
 public:
  explicit RunLock(fs::path path) : path_(std::move(path)) {
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (f == nullptr) {
      if (fs::exists(path_)) throw StateError("run directory is locked by another run: " + path_.string());
      throw IoError(path_.string(), "cannot create lock file");
    }
    std::fclose(f);
  }
  ~RunLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  fs::path path_;
};

std::string display_path(const fs::path& p, const fs::path& root) {
  const auto rel = p.lexically_relative(root);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return p.generic_string();
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return "config";
  if (dynamic_cast<const IoError*>(&e) != nullptr) return "io";
  if (dynamic_cast<const DataError*>(&e) != nullptr) return "data";
  if (dynamic_cast<const StateError*>(&e) != nullptr) return "state";
  return "internal";
}

}  // namespace

RunOutcome execute(const RunConfig& cfg, const fs::path& base_dir) {
  const auto v = validate(cfg, base_dir);
  if (!v.ok()) {
    const auto& first = v.issues.front();
    throw ConfigError(first.field, fmt::format("{} ({} issue(s) in total)", to_string(first), v.issues.size()));
  }

  RunOutcome outcome;
  outcome.root = run_root(cfg, base_dir);
  fs::create_directories(outcome.root);
  RunLock lock(outcome.root / "run.lock");
  write_file(outcome.root / "config.json", to_json(cfg).dump(2) + "\n");

  Json& m = outcome.manifest;
  m = Json{{"config_hash", config_hash(cfg)},
           {"toolkit_version", toolkit_version()},
           {"seed", cfg.seed},
           {"status", "running"},
           {"failed_step", nullptr},
           {"error", nullptr},
           {"steps", Json::array()}};
  const auto save = [&] { write_file(outcome.root / "manifest.json", m.dump(2) + "\n"); };

  for (std::size_t i = 0; i < cfg.steps.size(); ++i) {
    const auto& step = cfg.steps[i];
    const OpSpec& op = *find_op(step.op);
    const OpContext ctx{step_dir(outcome.root, i, step), derive_seed(cfg.seed, i)};
    std::error_code ec;
    fs::remove_all(ctx.out_dir, ec);
    fs::create_directories(ctx.out_dir);

    Json entry{{"index", i}, {"name", step.name}, {"op", step.op}, {"seed", ctx.seed}};
    ParamReader reader(v.resolved[i], op.params, static_cast<int>(i));
    const auto start = std::chrono::steady_clock::now();
    try {
      entry["summary"] = op.run(reader, ctx);
      entry["status"] = "ok";
    } catch (const std::exception& e) {
      entry["status"] = "failed";
      entry["error"] = {{"kind", error_kind(e)}, {"message", e.what()}};
    }
    entry["wall_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    Json inputs = Json::array();
    for (const auto& p : reader.inputs()) {
      inputs.push_back({{"path", display_path(p, outcome.root)},
                        {"sha256", fs::is_regular_file(p, ec) ? Json(sha256_file(p)) : Json(nullptr)}});
    }
    entry["inputs"] = inputs;
    Json outputs = Json::array();
    for (const auto& name : op.outputs) {
      const auto p = ctx.out_dir / name;
      if (fs::is_regular_file(p, ec)) outputs.push_back({{"path", display_path(p, outcome.root)}, {"sha256", sha256_file(p)}});
    }
    entry["outputs"] = outputs;
    m["steps"].push_back(entry);

    if (entry["status"] == "failed") {
      m["status"] = "failed";
      m["failed_step"] = i;
      m["error"] = fmt::format("step {} ({}): {}", i, step.name, entry["error"]["message"].get<std::string>());
      outcome.failed_step = static_cast<int>(i);
      save();
      return outcome;
    }
    save();
  }
  m["status"] = "ok";
  save();
  outcome.ok = true;
  return outcome;
}

}  // namespace langadapt::orchestrator
