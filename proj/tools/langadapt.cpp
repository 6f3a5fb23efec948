// SPDX-License-Identifier: Apache-2.0
// langadapt: one subcommand per op, plus run-validate and run-execute.
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "langadapt/common/error.hpp"
#include "langadapt/orchestrator/ops.hpp"
#include "langadapt/orchestrator/run.hpp"

namespace fs = std::filesystem;
using langadapt::Json;
using namespace langadapt::orchestrator;

namespace {

enum Exit { kOk = 0, kValidation = 1, kStepFailure = 2, kIo = 3 };

// Raw flag values per op; converted to typed params after parsing.
struct OpFlags {
  const OpSpec* op = nullptr;
  CLI::App* app = nullptr;
  std::map<std::string, std::string> scalars;
  std::map<std::string, std::vector<std::string>> lists;
  std::string out;
};

Json parse_json_arg(const std::string& key, const std::string& text) {
  std::error_code ec;
  const std::string body = fs::is_regular_file(text, ec) ? langadapt::read_file(text) : text;
  try {
    return Json::parse(body);
  } catch (const Json::parse_error&) {
    throw langadapt::ConfigError(key, "expected JSON text or a JSON file");
  }
}

Json scalar_param(const ParamDoc& d, const std::string& text) {
  switch (d.kind) {
    case ParamKind::kInt:
      try {
        std::size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (used == text.size()) return v;
      } catch (const std::exception&) {
      }
      throw langadapt::ConfigError(d.key, "expected an integer, got '" + text + "'");
    case ParamKind::kReal:
      try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) return v;
      } catch (const std::exception&) {
      }
      throw langadapt::ConfigError(d.key, "expected a number, got '" + text + "'");
    case ParamKind::kBool:
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw langadapt::ConfigError(d.key, "expected true or false");
    case ParamKind::kJson:
      return parse_json_arg(d.key, text);
    default:
      return text;
  }
}

bool is_list(ParamKind k) {
  return k == ParamKind::kPathList || k == ParamKind::kIntList || k == ParamKind::kStringList;
}

Json collect_params(const OpFlags& f) {
  Json params = Json::object();
  for (const auto& d : f.op->params) {
    if (is_list(d.kind)) {
      const auto it = f.lists.find(d.key);
      if (it == f.lists.end() || f.app->count("--" + d.key) == 0) continue;
      Json arr = Json::array();
      for (const auto& s : it->second) {
        arr.push_back(d.kind == ParamKind::kIntList ? scalar_param({d.key, ParamKind::kInt, "", false}, s) : Json(s));
      }
      params[d.key] = arr;
    } else if (f.app->count("--" + d.key) > 0) {
      params[d.key] = scalar_param(d, f.scalars.at(d.key));
    }
  }
  return params;
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const langadapt::ConfigError*>(&e) != nullptr) return kValidation;
  if (dynamic_cast<const langadapt::IoError*>(&e) != nullptr) return kIo;
  if (dynamic_cast<const langadapt::StateError*>(&e) != nullptr) return kIo;
  return kStepFailure;
}

void print_issues(const std::vector<ConfigIssue>& issues) {
  for (const auto& issue : issues) std::cerr << "error: " << to_string(issue) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corpus curation, tokenizer extension, vocabulary init and staged training for language adaptation"};
  app.set_version_flag("--version", toolkit_version());
  app.require_subcommand(1);

  std::vector<OpFlags> flags(op_table().size());
  for (std::size_t i = 0; i < op_table().size(); ++i) {
    const auto& op = op_table()[i];
    auto& f = flags[i];
    f.op = &op;
    f.app = app.add_subcommand(op.name, op.summary);
    f.app->add_option("--out", f.out, "output directory")->required();
    for (const auto& d : op.params) {
      const std::string help = d.help + (d.required ? " [required]" : "");
      if (is_list(d.kind)) {
        f.app->add_option("--" + d.key, f.lists[d.key], help)->expected(1, -1)->allow_extra_args();
      } else {
        f.app->add_option("--" + d.key, f.scalars[d.key], help);
      }
    }
  }

  std::string config_path;
  auto* validate_cmd = app.add_subcommand("run-validate", "check a run config without executing it");
  validate_cmd->add_option("config", config_path, "run config (JSON)")->required();
  auto* execute_cmd = app.add_subcommand("run-execute", "validate and execute a run config");
  execute_cmd->add_option("config", config_path, "run config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (validate_cmd->parsed() || execute_cmd->parsed()) {
      const auto cfg = load_run_config(config_path);
      const fs::path base = fs::absolute(config_path).parent_path();
      const auto v = validate(cfg, base);
      if (!v.ok()) {
        print_issues(v.issues);
        return kValidation;
      }
      if (validate_cmd->parsed()) {
        std::cout << Json{{"ok", true}, {"steps", cfg.steps.size()}, {"run_root", run_root(cfg, base).string()}}.dump(2)
                  << "\n";
        return kOk;
      }
      const auto outcome = execute(cfg, base);
      std::cout << Json{{"status", outcome.manifest["status"]},
                        {"run_root", outcome.root.string()},
                        {"manifest", (outcome.root / "manifest.json").string()}}
                       .dump(2)
                << "\n";
      if (!outcome.ok) {
        std::cerr << "error: " << outcome.manifest["error"].get<std::string>() << "\n";
        return kStepFailure;
      }
      return kOk;
    }

    for (const auto& f : flags) {
      if (!f.app->parsed()) continue;
      const Json params = collect_params(f);
      ParamReader reader(params, f.op->params, -1);
      f.op->check(reader);
      if (!reader.issues().empty()) {
        print_issues(reader.issues());
        return kValidation;
      }
      const Json summary = run_op(*f.op, params, OpContext{f.out, 0});
      std::cout << summary.dump(2) << "\n";
      return kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  }
  return kOk;
}
