// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fstream>

#include <unistd.h>

#include "langadapt/common/error.hpp"
#include "langadapt/common/io.hpp"
#include "langadapt/orchestrator/run.hpp"
#include "langadapt/orchestrator/synth.hpp"

using namespace langadapt;
using namespace langadapt::orchestrator;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("langadapt-orch-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

// Small synth corpus followed by corpus steps only.
Json corpus_config() {
  return Json::parse(R"({
    "seed": 3,
    "pipeline": [
      {"name": "synth", "op": "synth", "params": {"english_docs": 10, "korean_docs": 20, "mixed_docs": 4,
                                                  "near_duplicates": 4, "noise_docs": 3,
                                                  "base_english_docs": 4, "base_korean_docs": 2, "eval_docs": 2}},
      {"name": "raw", "op": "corpus-ingest", "params": {"inputs": ["@synth:raw.jsonl"]}},
      {"name": "filter", "op": "corpus-filter", "params": {"input": "@raw", "rules": [{"rule": "min_len", "value": 10}]}},
      {"name": "dedup", "op": "corpus-dedup", "params": {"input": "@filter"}},
      {"name": "ppl", "op": "corpus-pplfilter", "params": {"input": "@dedup", "value": 90}},
      {"name": "select", "op": "corpus-select", "params": {"input": "@ppl", "fraction": 0.5}}
    ]})");
}

std::vector<std::string> output_hashes(const Json& manifest) {
  std::vector<std::string> out;
  for (const auto& s : manifest["steps"])
    for (const auto& o : s["outputs"]) out.push_back(o["path"].get<std::string>() + "=" + o["sha256"].get<std::string>());
  return out;
}

}  // namespace

TEST_CASE("synthetic corpus") {
  SynthConfig c;
  c.seed = 5;
  const auto a = synth_bundle(c);
  const auto b = synth_bundle(c);
  CHECK(synth_records(a.raw) == synth_records(b.raw));
  CHECK(a.raw.size() == 120 + 240 + 40 + 24 + 24);
  CHECK(a.base.size() == 375);
  CHECK(a.eval.size() == 40);
  c.seed = 6;
  CHECK(synth_records(synth_bundle(c).raw) != synth_records(a.raw));

  // Subject particle agrees with the final consonant: 책 ends in a consonant, 학교 does not.
  Rng rng(1);
  std::size_t checked = 0;
  for (int i = 0; i < 200; ++i) {
    const std::string s = korean_sentence(rng);
    CHECK(s.find("책가") == std::string::npos);
    CHECK(s.find("학교이") == std::string::npos);
    checked += s.find("책이") != std::string::npos || s.find("학교가") != std::string::npos;
  }
  CHECK(checked > 0);
}

TEST_CASE("config parsing and hashing") {
  auto cfg = parse_run_config(corpus_config());
  CHECK(cfg.steps.size() == 6);
  CHECK(cfg.steps[1].op == "corpus-ingest");
  const auto h = config_hash(cfg);
  cfg.run_dir = "/elsewhere";
  CHECK(config_hash(cfg) == h);

  // Key order does not matter.
  const Json reordered = Json::parse(R"({"pipeline": [{"params": {"fraction": 0.5, "input": "x"}, "op": "corpus-select"}], "seed": 1})");
  const Json ordered = Json::parse(R"({"seed": 1, "pipeline": [{"op": "corpus-select", "params": {"input": "x", "fraction": 0.5}}]})");
  CHECK(config_hash(parse_run_config(reordered)) == config_hash(parse_run_config(ordered)));
  cfg.seed = 4;
  CHECK(config_hash(cfg) != h);

  CHECK_THROWS_AS(parse_run_config(Json::parse(R"({"seed": 1})")), ConfigError);
  CHECK_THROWS_AS(parse_run_config(Json::parse(R"({"pipeline": [], "sede": 1})")), ConfigError);
  CHECK_THROWS_AS(parse_run_config(Json::parse(R"({"pipeline": [{"name": "x"}]})")), ConfigError);
}

TEST_CASE("validate") {
  TempDir tmp;
  SUBCASE("well-formed config") { CHECK(validate(parse_run_config(corpus_config()), tmp.path).ok()); }

  SUBCASE("fraction out of range gives one issue naming the field") {
    Json j = corpus_config();
    j["pipeline"][5]["params"]["fraction"] = 1.5;
    const auto v = validate(parse_run_config(j), tmp.path);
    REQUIRE(v.issues.size() == 1);
    CHECK(v.issues[0].step == 5);
    CHECK(v.issues[0].field == "fraction");
  }

  SUBCASE("dangling corpus path gives one issue naming the path") {
    const Json j = Json::parse(R"({"pipeline": [{"op": "corpus-stats", "params": {"input": "nowhere/corpus.jsonl"}}]})");
    const auto v = validate(parse_run_config(j), tmp.path);
    REQUIRE(v.issues.size() == 1);
    CHECK(v.issues[0].field == "input");
    CHECK(v.issues[0].message.find("nowhere/corpus.jsonl") != std::string::npos);
  }

  SUBCASE("issues from every step are collected") {
    const Json j = Json::parse(R"({"pipeline": [
      {"name": "a", "op": "corpus-select", "params": {"input": "@later", "fraction": 0}},
      {"name": "b", "op": "tok-train", "params": {"input": "@a:report.json", "extra": 1}},
      {"name": "b", "op": "no-such-op"}
    ]})");
    const auto v = validate(parse_run_config(j), tmp.path);
    std::vector<std::pair<int, std::string>> got;
    for (const auto& i : v.issues) got.push_back({i.step, i.field});
    const std::vector<std::pair<int, std::string>> expected = {
        {0, "input"}, {0, "fraction"}, {1, "input"}, {1, "extra"}, {1, "vocab_size"}, {2, "name"}, {2, "op"}};
    CHECK(got == expected);
  }

  SUBCASE("relative paths resolve against the config directory") {
    write_file(tmp.path / "data" / "c.jsonl", "");
    const Json j = Json::parse(R"({"pipeline": [{"op": "corpus-stats", "params": {"input": "data/c.jsonl"}}]})");
    const auto v = validate(parse_run_config(j), tmp.path);
    CHECK(v.ok());
    CHECK(fs::path(v.resolved[0]["input"].get<std::string>()) == tmp.path / "data" / "c.jsonl");
  }
}

TEST_CASE("execute") {
  TempDir tmp;
  auto cfg = parse_run_config(corpus_config());
  cfg.run_dir = tmp.path / "one";
  const auto a = execute(cfg, tmp.path);
  REQUIRE(a.ok);
  CHECK(a.root == tmp.path / "one" / config_hash(cfg).substr(0, 16));
  CHECK(fs::is_regular_file(a.root / "05-select" / "corpus.jsonl"));
  CHECK_FALSE(fs::exists(a.root / "run.lock"));

  const Json m = Json::parse(read_file(a.root / "manifest.json"));
  CHECK(m == a.manifest);
  CHECK(m["status"] == "ok");
  CHECK(m["config_hash"] == config_hash(cfg));
  CHECK(m["toolkit_version"] == toolkit_version());
  // Only corpus steps: no tokenizer or model artifacts.
  for (const auto& s : m["steps"]) {
    const std::string op = s["op"];
    CHECK((op == "synth" || op.rfind("corpus-", 0) == 0));
    for (const auto& o : s["outputs"]) {
      const std::string p = o["path"];
      CHECK(p.find(".ckpt") == std::string::npos);
      CHECK(p.find("vocab") == std::string::npos);
    }
    CHECK(s["wall_ms"].get<double>() >= 0.0);
  }
  CHECK(m["steps"][1]["inputs"][0]["path"] == "00-synth/raw.jsonl");

  SUBCASE("same config twice gives identical artifact hashes") {
    cfg.run_dir = tmp.path / "two";
    const auto b = execute(cfg, tmp.path);
    REQUIRE(b.ok);
    CHECK(output_hashes(a.manifest) == output_hashes(b.manifest));
    CHECK(output_hashes(a.manifest).size() >= 10);
  }

  SUBCASE("a held lock refuses the run") {
    write_file(a.root / "run.lock", "");
    CHECK_THROWS_AS(execute(cfg, tmp.path), StateError);
  }

  SUBCASE("a failing step halts with a partial manifest") {
    Json j = corpus_config();
    j["pipeline"].push_back(Json::parse(R"({"name": "tok", "op": "tok-train", "params": {"input": "@select", "vocab_size": 3}})"));
    j["pipeline"].push_back(Json::parse(R"({"name": "after", "op": "corpus-stats", "params": {"input": "@select"}})"));
    auto bad = parse_run_config(j);
    bad.run_dir = tmp.path / "bad";
    const auto out = execute(bad, tmp.path);
    CHECK_FALSE(out.ok);
    CHECK(out.failed_step == 6);
    CHECK(out.manifest["status"] == "failed");
    CHECK(out.manifest["steps"].size() == 7);
    CHECK(out.manifest["error"].get<std::string>().find("step 6 (tok)") == 0);
    CHECK(Json::parse(read_file(out.root / "manifest.json"))["status"] == "failed");
  }

  SUBCASE("invalid config is rejected before anything runs") {
    Json j = corpus_config();
    j["pipeline"][5]["params"]["fraction"] = 2;
    auto bad = parse_run_config(j);
    bad.run_dir = tmp.path / "invalid";
    CHECK_THROWS_AS(execute(bad, tmp.path), ConfigError);
    CHECK_FALSE(fs::exists(tmp.path / "invalid"));
  }
}

TEST_CASE("param reader") {
  const std::vector<ParamDoc> docs = {{"n", ParamKind::kInt, "", true}, {"x", ParamKind::kReal, "", false},
                                      {"names", ParamKind::kStringList, "", false}};
  const Json params = Json::parse(R"({"x": "high", "names": ["a", 2], "zzz": true})");
  ParamReader r(params, docs, 4);
  CHECK(r.real("x", 0.5) == 0.5);
  CHECK(r.str_list("names").empty());
  std::vector<std::string> fields;
  for (const auto& i : r.issues()) {
    CHECK(i.step == 4);
    fields.push_back(i.field);
  }
  CHECK(fields == std::vector<std::string>{"zzz", "n", "x", "names"});
  CHECK_THROWS_AS(r.throw_if_issues(), ConfigError);
}
