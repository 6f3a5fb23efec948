// SPDX-License-Identifier: Apache-2.0
#include "langadapt/orchestrator/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include <fmt/format.h>

#include "langadapt/common/error.hpp"
#include "langadapt/common/rng.hpp"
#include "langadapt/corpus/dedup.hpp"
#include "langadapt/corpus/ingest.hpp"
#include "langadapt/corpus/ngram_lm.hpp"
#include "langadapt/corpus/ppl_filter.hpp"
#include "langadapt/corpus/rules.hpp"
#include "langadapt/corpus/select.hpp"
#include "langadapt/corpus/stats.hpp"
#include "langadapt/init/compare.hpp"
#include "langadapt/init/extend.hpp"
#include "langadapt/orchestrator/synth.hpp"
#include "langadapt/tokenizer/merge.hpp"
#include "langadapt/tokenizer/metrics.hpp"
#include "langadapt/tokenizer/refine.hpp"
#include "langadapt/tokenizer/unigram_trainer.hpp"
#include "langadapt/train/checkpoint.hpp"
#include "langadapt/train/data.hpp"
#include "langadapt/train/lora.hpp"
#include "langadapt/train/pipeline.hpp"

namespace langadapt::orchestrator {

namespace fs = std::filesystem;

std::string to_string(const ConfigIssue& issue) {
  const std::string where = issue.step >= 0 ? fmt::format("step {}: ", issue.step) : std::string();
  return where + issue.field + ": " + issue.message;
}

// ---------------------------------------------------------------- ParamReader

ParamReader::ParamReader(const Json& params, const std::vector<ParamDoc>& docs, int step,
                         const std::set<fs::path>* promised)
    : params_(params), docs_(docs), step_(step), promised_(promised) {
  if (!params_.is_object()) {
    issues_.push_back({step_, "params", "must be an object"});
    return;
  }
  for (const auto& [key, value] : params_.items()) {
    if (doc(key) == nullptr) issues_.push_back({step_, key, "unknown parameter"});
  }
  for (const auto& d : docs_) {
    if (d.required && !params_.contains(d.key)) issues_.push_back({step_, d.key, "required"});
  }
}

const ParamDoc* ParamReader::doc(const std::string& key) const {
  for (const auto& d : docs_) {
    if (d.key == key) return &d;
  }
  return nullptr;
}

const Json* ParamReader::find(const std::string& key) {
  if (!params_.is_object()) return nullptr;
  const auto it = params_.find(key);
  return it == params_.end() ? nullptr : &*it;
}

bool ParamReader::has(const std::string& key) const { return params_.is_object() && params_.contains(key); }

std::string ParamReader::str(const std::string& key, const std::string& def) {
  const Json* v = find(key);
  if (v == nullptr) return def;
  if (!v->is_string()) {
    check(false, key, "expected a string");
    return def;
  }
  return v->get<std::string>();
}

std::int64_t ParamReader::integer(const std::string& key, std::int64_t def) {
  const Json* v = find(key);
  if (v == nullptr) return def;
  if (!v->is_number_integer()) {
    check(false, key, "expected an integer");
    return def;
  }
  return v->get<std::int64_t>();
}

double ParamReader::real(const std::string& key, double def) {
  const Json* v = find(key);
  if (v == nullptr) return def;
  if (!v->is_number()) {
    check(false, key, "expected a number");
    return def;
  }
  return v->get<double>();
}

bool ParamReader::boolean(const std::string& key, bool def) {
  const Json* v = find(key);
  if (v == nullptr) return def;
  if (!v->is_boolean()) {
    check(false, key, "expected true or false");
    return def;
  }
  return v->get<bool>();
}

Json ParamReader::json(const std::string& key, const Json& def) {
  const Json* v = find(key);
  if (v == nullptr) return def;
  if (!v->is_object() && !v->is_array()) {
    check(false, key, "expected an object or array");
    return def;
  }
  return *v;
}

std::vector<std::int64_t> ParamReader::int_list(const std::string& key) {
  std::vector<std::int64_t> out;
  const Json* v = find(key);
  if (v == nullptr) return out;
  if (!v->is_array()) {
    check(false, key, "expected a list of integers");
    return out;
  }
  for (const auto& x : *v) {
    if (!x.is_number_integer()) {
      check(false, key, "expected a list of integers");
      return {};
    }
    out.push_back(x.get<std::int64_t>());
  }
  return out;
}

std::vector<std::string> ParamReader::str_list(const std::string& key) {
  std::vector<std::string> out;
  const Json* v = find(key);
  if (v == nullptr) return out;
  if (!v->is_array()) {
    check(false, key, "expected a list of strings");
    return out;
  }
  for (const auto& x : *v) {
    if (!x.is_string()) {
      check(false, key, "expected a list of strings");
      return {};
    }
    out.push_back(x.get<std::string>());
  }
  return out;
}

fs::path ParamReader::checked_path(const std::string& field, const Json& value) {
  if (!value.is_string()) {
    check(false, field, "expected a path");
    return {};
  }
  fs::path p = value.get<std::string>();
  const bool promised = promised_ != nullptr && promised_->count(p) > 0;
  if (!promised) {
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) issues_.push_back({step_, field, "no such file: " + p.string()});
  }
  inputs_.push_back(p);
  return p;
}

fs::path ParamReader::path(const std::string& key) {
  const Json* v = find(key);
  if (v == nullptr) return {};
  return checked_path(key, *v);
}

std::vector<fs::path> ParamReader::paths(const std::string& key) {
  std::vector<fs::path> out;
  const Json* v = find(key);
  if (v == nullptr) return out;
  if (v->is_string()) return {checked_path(key, *v)};
  if (!v->is_array()) {
    check(false, key, "expected a list of paths");
    return out;
  }
  for (const auto& x : *v) out.push_back(checked_path(key, x));
  return out;
}

void ParamReader::check(bool ok, const std::string& field, const std::string& message) {
  if (ok) return;
  // A field already reported (missing, wrong type) is not range-checked again.
  for (const auto& i : issues_) {
    if (i.field == field) return;
  }
  issues_.push_back({step_, field, message});
}

void ParamReader::guard(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    std::string message = e.what();
    const std::string prefix = e.field() + ": ";
    if (message.rfind(prefix, 0) == 0) message.erase(0, prefix.size());
    issues_.push_back({step_, e.field(), message});
  }
}

void ParamReader::throw_if_issues() const {
  if (issues_.empty()) return;
  const auto& first = issues_.front();
  throw ConfigError(first.field, first.message);
}

// ---------------------------------------------------------------- helpers

namespace {

using Body = std::function<Json(ParamReader&, const OpContext*)>;

// Parsing is done; stop here when only checking, otherwise fail on issues.
bool ready(const ParamReader& r, const OpContext* ctx) {
  if (ctx == nullptr) return false;
  r.throw_if_issues();
  return true;
}

OpSpec make_op(std::string name, std::string summary, std::vector<ParamDoc> params, std::vector<std::string> outputs,
               Body body) {
  OpSpec op;
  op.name = std::move(name);
  op.summary = std::move(summary);
  op.params = std::move(params);
  op.outputs = std::move(outputs);
  op.check = [body](ParamReader& r) { body(r, nullptr); };
  op.run = [body](ParamReader& r, const OpContext& ctx) { return body(r, &ctx); };
  return op;
}

void write_json(const fs::path& path, const Json& j) { write_file(path, j.dump(2) + "\n"); }

std::vector<std::string> load_texts(const fs::path& path) { return corpus::texts(corpus::load_corpus(path)); }

std::uint64_t seed_param(ParamReader& r, const OpContext* ctx) {
  const auto s = r.integer("seed", -1);
  if (s >= 0) return static_cast<std::uint64_t>(s);
  return ctx != nullptr ? ctx->seed : 0;
}

int positive_int(ParamReader& r, const std::string& key, int def) {
  const auto v = r.integer(key, def);
  r.check(v >= 1 && v <= std::numeric_limits<int>::max(), key, "must be a positive integer");
  return static_cast<int>(std::clamp<std::int64_t>(v, 1, std::numeric_limits<int>::max()));
}

const std::vector<ParamDoc> kTrainerParams = {
    {"vocab_size", ParamKind::kInt, "total vocabulary size, control and byte pieces included", true},
    {"byte_fallback", ParamKind::kBool, "add the 256 byte pieces (default false)"},
    {"seed_vocab_multiplier", ParamKind::kReal, "seed pool size as a multiple of vocab_size (default 4)"},
    {"prune_fraction", ParamKind::kReal, "fraction pruned per round (default 0.2)"},
    {"max_piece_len", ParamKind::kInt, "longest piece in codepoints (default 16)"},
    {"em_iterations", ParamKind::kInt, "EM iterations per round (default 2)"},
};

tokenizer::UnigramTrainerConfig trainer_config(ParamReader& r, bool need_size = true) {
  tokenizer::UnigramTrainerConfig c;
  if (need_size) {
    const auto v = r.integer("vocab_size", 0);
    r.check(v >= 1, "vocab_size", "must be >= 1");
    c.target_vocab = static_cast<std::size_t>(std::max<std::int64_t>(v, 1));
  }
  c.byte_fallback = r.boolean("byte_fallback", false);
  c.seed_vocab_multiplier = r.real("seed_vocab_multiplier", c.seed_vocab_multiplier);
  r.check(c.seed_vocab_multiplier >= 1.0, "seed_vocab_multiplier", "must be >= 1");
  c.prune_fraction = r.real("prune_fraction", c.prune_fraction);
  r.check(c.prune_fraction > 0.0 && c.prune_fraction < 1.0, "prune_fraction", "must be in (0, 1)");
  c.max_piece_len = static_cast<std::size_t>(positive_int(r, "max_piece_len", static_cast<int>(c.max_piece_len)));
  c.em_iterations = positive_int(r, "em_iterations", c.em_iterations);
  return c;
}

template <typename T>
std::vector<T> concat(std::vector<T> a, const std::vector<T>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

train::LoraConfig lora_config(ParamReader& r) {
  train::LoraConfig c;
  const Json j = r.json("lora", Json::object());
  r.guard([&] {
    try {
      c.rank = j.value("rank", c.rank);
      c.alpha = j.value("alpha", c.alpha);
      for (const auto& t : j.value("targets", std::vector<std::string>{})) c.targets.insert(t);
    } catch (const Json::exception& e) {
      throw ConfigError("lora", e.what());
    }
    if (c.rank < 1) throw ConfigError("lora", "rank must be >= 1");
    if (!(c.alpha > 0.0)) throw ConfigError("lora", "alpha must be positive");
    const auto& names = train::projection_names();
    for (const auto& t : c.targets) {
      if (std::find(names.begin(), names.end(), t) == names.end()) throw ConfigError("lora", "unknown target '" + t + "'");
    }
  });
  return c;
}

train::StagePlan stage_plan(ParamReader& r, const std::string& key) {
  train::StagePlan plan;
  const Json j = r.json(key, Json::object());
  r.guard([&] {
    plan = train::stage_plan_from_json(j);
    train::validate(plan);
  });
  return plan;
}

void check_model_matches(const train::ModelParams<float>& model, const tokenizer::SubwordModel& tok,
                         const std::string& what) {
  if (static_cast<std::size_t>(model.config.vocab) != tok.size()) {
    throw DataError(fmt::format("model vocabulary {} does not match {} size {}", model.config.vocab, what, tok.size()));
  }
}

Json eval_json(const train::EvalResult& e) {
  return Json{{"loss", e.loss}, {"accuracy", e.accuracy}, {"predictions", e.predictions}};
}

void write_metrics(const fs::path& path, const std::vector<train::MetricRecord>& timeline) {
  std::vector<Json> records;
  for (const auto& m : timeline) records.push_back(train::to_json(m));
  write_jsonl(path, records);
}

char32_t codepoint_param(const Json& v) {
  if (v.is_number_unsigned()) return static_cast<char32_t>(v.get<std::uint64_t>());
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s.rfind("U+", 0) == 0 || s.rfind("u+", 0) == 0) s = s.substr(2);
    try {
      std::size_t used = 0;
      const auto cp = std::stoul(s, &used, 16);
      if (used == s.size()) return static_cast<char32_t>(cp);
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("allowed_ranges", "expected a codepoint like 44032 or \"U+AC00\"");
}

// ---------------------------------------------------------------- ops

std::vector<OpSpec> build_table() {
  std::vector<OpSpec> ops;

  ops.push_back(make_op(
      "synth", "write the seeded synthetic bilingual corpus (raw, base and eval record files)",
      {{"seed", ParamKind::kInt, "generator seed (default: step seed)"},
       {"english_docs", ParamKind::kInt, "raw English documents (120)"},
       {"korean_docs", ParamKind::kInt, "raw Korean documents (240)"},
       {"mixed_docs", ParamKind::kInt, "raw mixed documents (40)"},
       {"near_duplicates", ParamKind::kInt, "raw near duplicates (24)"},
       {"noise_docs", ParamKind::kInt, "raw noise documents (24)"},
       {"base_english_docs", ParamKind::kInt, "base-model English documents (300)"},
       {"base_korean_docs", ParamKind::kInt, "base-model Korean documents (75)"},
       {"eval_docs", ParamKind::kInt, "held-out mixed documents (40)"}},
      {"raw.jsonl", "base.jsonl", "eval.jsonl"}, [](ParamReader& r, const OpContext* ctx) -> Json {
        SynthConfig c;
        c.seed = seed_param(r, ctx);
        const auto count = [&](const char* key, int& field) {
          const auto v = r.integer(key, field);
          r.check(v >= 0 && v <= 1000000, key, "must be in [0, 1000000]");
          field = static_cast<int>(std::clamp<std::int64_t>(v, 0, 1000000));
        };
        count("english_docs", c.english_docs);
        count("korean_docs", c.korean_docs);
        count("mixed_docs", c.mixed_docs);
        count("near_duplicates", c.near_duplicates);
        count("noise_docs", c.noise_docs);
        count("base_english_docs", c.base_english_docs);
        count("base_korean_docs", c.base_korean_docs);
        count("eval_docs", c.eval_docs);
        if (!ready(r, ctx)) return {};
        const auto b = synth_bundle(c);
        write_jsonl(ctx->out_dir / "raw.jsonl", synth_records(b.raw));
        write_jsonl(ctx->out_dir / "base.jsonl", synth_records(b.base));
        write_jsonl(ctx->out_dir / "eval.jsonl", synth_records(b.eval));
        return Json{{"raw", b.raw.size()}, {"base", b.base.size()}, {"eval", b.eval.size()}};
      }));

  ops.push_back(make_op(
      "corpus-ingest", "read plain-text files or line-delimited records into a corpus store",
      {{"inputs", ParamKind::kPathList, "input files", true},
       {"format", ParamKind::kString, "'jsonl' (default) or 'text'"}},
      {"corpus.jsonl", "report.json"}, [](ParamReader& r, const OpContext* ctx) -> Json {
        const auto inputs = r.paths("inputs");
        r.check(r.has("inputs") && !inputs.empty(), "inputs", "at least one file is required");
        corpus::IngestFormat format = corpus::IngestFormat::kJsonl;
        r.guard([&] { format = corpus::parse_ingest_format(r.str("format", "jsonl")); });
        if (!ready(r, ctx)) return {};
        const auto res = corpus::ingest(inputs, format);
        corpus::save_corpus(ctx->out_dir / "corpus.jsonl", res.corpus);
        write_json(ctx->out_dir / "report.json", corpus::to_json(res.report));
        return corpus::to_json(res.report);
      }));

  ops.push_back(make_op(
      "corpus-select", "keep a seeded random fraction of documents",
      {{"input", ParamKind::kPath, "corpus store", true},
       {"fraction", ParamKind::kReal, "fraction in (0, 1]", true},
       {"seed", ParamKind::kInt, "selection seed (default: step seed)"}},
      {"corpus.jsonl"}, [](ParamReader& r, const OpContext* ctx) -> Json {
        const auto input = r.path("input");
        const double fraction = r.real("fraction", 1.0);
        r.check(fraction > 0.0 && fraction <= 1.0, "fraction", "must be in (0, 1]");
        const auto seed = seed_param(r, ctx);
        if (!ready(r, ctx)) return {};
        const auto in = corpus::load_corpus(input);
        const auto out = corpus::random_select(in, fraction, seed);
        corpus::save_corpus(ctx->out_dir / "corpus.jsonl", out);
        return Json{{"input", in.size()}, {"kept", out.size()}};
      }));

  ops.push_back(make_op(
      "corpus-filter", "apply ordered rule predicates",
      {{"input", ParamKind::kPath, "corpus store", true},
       {"rules", ParamKind::kJson,
        "list of {rule, value, script, patterns}; rules: min_len max_len max_foreign_ratio max_char_run boilerplate"}},
      {"corpus.jsonl", "report.json"}, [](ParamReader& r, const OpContext* ctx) -> Json {
        const auto input = r.path("input");
        std::vector<corpus::Rule> rules;
        const Json j = r.json("rules", Json::array());
        r.check(j.is_array(), "rules", "expected a list");
        r.guard([&] {
          if (!j.is_array()) return;
          for (const auto& x : j) rules.push_back(corpus::rule_from_json(x));
          corpus::validate(rules);
        });
        if (!ready(r, ctx)) return {};
        const auto res = corpus::rule_filter(corpus::load_corpus(input), rules);
        corpus::save_corpus(ctx->out_dir / "corpus.jsonl", res.corpus);
        write_json(ctx->out_dir / "report.json", corpus::to_json(res.report));
        return Json{{"kept", res.report.kept}, {"rejected", res.report.rejections.size()}};
      }));

  ops.push_back(make_op(
      "corpus-dedup", "remove near duplicates (MinHash + LSH over character shingles)",
      {{"input", ParamKind::kPath, "corpus store", true},
       {"shingle_n", ParamKind::kInt, "codepoints per shingle (5)"},
       {"num_hashes", ParamKind::kInt, "MinHash permutations (128)"},
       {"bands", ParamKind::kInt, "LSH bands (16)"},
       {"jaccard_threshold", ParamKind::kReal, "link threshold (0.8)"},
       {"seed", ParamKind::kInt, "hash-family seed (1)"}},
      {"corpus.jsonl", "report.json"}, [](ParamReader& r, const OpContext* ctx) -> Json {
        const auto input = r.path("input");
        corpus::DedupConfig c;
        c.shingle_n = static_cast<int>(r.integer("shingle_n", c.shingle_n));
        c.num_hashes = static_cast<int>(r.integer("num_hashes", c.num_hashes));
        c.bands = static_cast<int>(r.integer("bands", c.bands));
        c.jaccard_threshold = r.real("jaccard_threshold", c.jaccard_threshold);
        c.seed = static_cast<std::uint64_t>(r.integer("seed", static_cast<std::int64_t>(c.seed)));
        r.guard([&] { corpus::validate(c); });
        if (!ready(r, ctx)) return {};
        const auto res = corpus::dedup(corpus::load_corpus(input), c);
        corpus::save_corpus(ctx->out_dir / "corpus.jsonl", res.corpus);
        write_json(ctx->out_dir / "report.json", corpus::to_json(res.report));
        return Json{{"kept", res.corpus.size()}, {"removed", res.report.removed}, {"clusters", res.report.clusters.size()}};
      }));

  ops.push_back(make_op(
      "corpus-pplfilter", "score documents with a character n-gram LM and drop high-perplexity ones",
      {{"input", ParamKind::kPath, "corpus store", true},
       {"trusted", ParamKind::kPath, "corpus store the LM is trained on (default: input)"},
       {"order", ParamKind::kInt, "n-gram order (3)"},
       {"smoothing_k", ParamKind::kReal, "add-k constant (0.1)"},
       {"mode", ParamKind::kString, "'percentile' (default) or 'absolute'"},
       {"value", ParamKind::kReal, "percentile to keep (50) or absolute cutoff"}},
      {"corpus.jsonl", "report.json", "lm.json"}, [](ParamReader& r, const OpContext* ctx) -> Json {
        const auto input = r.path("input");
        const auto trusted = r.has("trusted") ? r.path("trusted") : input;
        const auto order = r.integer("order", 3);
        r.check(order >= 1 && order <= 16, "order", "must be in [1, 16]");
        const double k = r.real("smoothing_k", 0.1);
        r.check(k > 0.0, "smoothing_k", "must be positive");
        corpus::PplMode mode = corpus::PplMode::kPercentile;
        r.guard([&] { mode = corpus::parse_ppl_mode(r.str("mode", "percentile")); });
        const double value = r.real("value", 50.0);
        r.guard([&] { corpus::validate_ppl_filter(mode, value); });
        if (!ready(r, ctx)) return {};
        const auto lm = corpus::NgramLM::train(load_texts(trusted), static_cast<int>(order), k);
        const auto res = corpus::ppl_filter(corpus::load_corpus(input), lm, mode, value);
        corpus::save_corpus(ctx->out_dir / "corpus.jsonl", res.corpus);
        write_json(ctx->out_dir / "report.json", corpus::to_json(res.report));
        lm.save(ctx->out_dir / "lm.json");
        return Json{{"kept", res.report.kept}, {"dropped", res.report.dropped}};
      }));

  ops.push_back(make_op(
      "corpus-stats", "document, byte, token and packed-sample counts",
      {{"input", ParamKind::kPath, "corpus store", true},
       {"tokenizer", ParamKind::kPath, "vocab file (optional)"},
       {"context", ParamKind::kInt, "sample length in tokens (128)"}},
      {"stats.json"}, [](ParamReader& r, const OpContext* ctx) -> Json {
        const auto input = r.path("input");
        const auto tok_path = r.path("tokenizer");
        const int context = positive_int(r, "context", 128);
        if (!ready(r, ctx)) return {};
        std::optional<tokenizer::SubwordModel> tok;
        if (!tok_path.empty()) tok = tokenizer::SubwordModel::load(tok_path);
        const auto s = corpus::corpus_stats(corpus::load_corpus(input), tok ? &*tok : nullptr, context);
        write_json(ctx->out_dir / "stats.json", corpus::to_json(s));
        return corpus::to_json(s);
      }));

  ops.push_back(make_op(
      "tok-train", "train a unigram subword vocabulary",
      concat<ParamDoc>({{"input", ParamKind::kPath, "corpus store", true}}, kTrainerParams), {"vocab.tsv"},
      [](ParamReader& r, const OpContext* ctx) -> Json {
        const auto input = r.path("input");
        const auto cfg = trainer_config(r);
        if (!ready(r, ctx)) return {};
        const auto model = tokenizer::train_unigram(load_texts(input), cfg);
        model.save(ctx->out_dir / "vocab.tsv");
        return Json{{"vocab_size", model.size()}};
      }));

  ops.push_back(make_op(
      "tok-refine", "filter pieces by range, length, deny list and corpus frequency; append manual pieces",
      {{"model", ParamKind::kPath, "vocab file", true},
       {"input", ParamKind::kPath, "corpus store for frequencies", true},
       {"allowed_ranges", ParamKind::kJson, "list of [lo, hi] codepoints (ints or \"U+AC00\")"},
       {"min_corpus_freq", ParamKind::kInt, "minimum piece count (0)"},
       {"max_piece_len", ParamKind::kInt, "longest piece in codepoints (0 = off)"},
       {"manual_deny", ParamKind::kStringList, "pieces to drop"},
       {"manual_add", ParamKind::kStringList, "pieces to append at the tail score"}},
      {"vocab.tsv", "report.json"}, [](ParamReader& r, const OpContext* ctx) -> Json {
        const auto model_path = r.path("model");
        const auto input = r.path("input");
        tokenizer::PieceFilterRules rules;
        const Json ranges = r.json("allowed_ranges", Json::array());
        r.guard([&] {
          if (!ranges.is_array()) throw ConfigError("allowed_ranges", "expected a list of [lo, hi]");
          for (const auto& pair : ranges) {
            if (!pair.is_array() || pair.size() != 2) throw ConfigError("allowed_ranges", "expected [lo, hi]");
            rules.allowed_ranges.push_back({codepoint_param(pair[0]), codepoint_param(pair[1])});
          }
        });
        const auto min_freq = r.integer("min_corpus_freq", 0);
        r.check(min_freq >= 0, "min_corpus_freq", "must be >= 0");
        rules.min_corpus_freq = static_cast<std::uint64_t>(std::max<std::int64_t>(min_freq, 0));
        const auto max_len = r.integer("max_piece_len", 0);
        r.check(max_len >= 0, "max_piece_len", "must be >= 0");
        rules.max_piece_len = static_cast<std::size_t>(std::max<std::int64_t>(max_len, 0));
        rules.manual_deny = r.str_list("manual_deny");
        for (const auto& p : r.str_list("manual_add")) rules.manual_add.push_back({p, "tail"});
        r.guard([&] { tokenizer::validate_rules(rules); });
        if (!ready(r, ctx)) return {};
        const auto res = tokenizer::refine_pieces(tokenizer::SubwordModel::load(model_path), rules, load_texts(input));
        res.model.save(ctx->out_dir / "vocab.tsv");
        const auto& rep = res.report;
        write_json(ctx->out_dir / "report.json",
                   Json{{"removed_by_range", rep.removed_by_range},
                        {"removed_by_length", rep.removed_by_length},
                        {"removed_by_deny", rep.removed_by_deny},
                        {"removed_by_frequency", rep.removed_by_frequency},
                        {"added", rep.added},
                        {"add_collisions", rep.add_collisions}});
        return Json{{"vocab_size", res.model.size()}};
      }));

  ops.push_back(make_op(
      "tok-merge", "append the new model's pieces to the base model (base ids preserved)",
      {{"base", ParamKind::kPath, "base vocab file", true}, {"new", ParamKind::kPath, "new vocab file", true}},
      {"vocab.tsv", "report.json"}, [](ParamReader& r, const OpContext* ctx) -> Json {
        const auto base_path = r.path("base");
        const auto new_path = r.path("new");
        if (!ready(r, ctx)) return {};
        const auto base = tokenizer::SubwordModel::load(base_path);
        const auto added = tokenizer::SubwordModel::load(new_path);
        const auto res = tokenizer::merge(base, added);
        res.model.save(ctx->out_dir / "vocab.tsv");
        const Json summary{{"base_size", base.size()},
                           {"new_size", added.size()},
                           {"merged_size", res.model.size()},
                           {"overlap", res.overlap}};
        write_json(ctx->out_dir / "report.json", summary);
        return summary;
      }));

  ops.push_back(make_op(
      "tok-encode", "encode a corpus (or one text) to token ids",
      {{"model", ParamKind::kPath, "vocab file", true},
       {"input", ParamKind::kPath, "corpus store"},
       {"text", ParamKind::kString, "a single text; its ids are returned in the summary"}},
      {"ids.jsonl"}, [](ParamReader& r, const OpContext* ctx) -> Json {
        const auto model_path = r.path("model");
        const auto input = r.path("input");
        const auto text = r.str("text");
        r.check(r.has("input") != r.has("text"), "input", "give exactly one of input and text");
        if (!ready(r, ctx)) return {};
        const auto model = tokenizer::SubwordModel::load(model_path);
        std::vector<Json> records;
        Json summary = Json::object();
        if (r.has("text")) {
          const auto ids = model.encode(text);
          records.push_back({{"ids", ids}});
          summary["ids"] = ids;
          Json pieces = Json::array();
          for (const int id : ids) pieces.push_back(model.piece(id).text);
          summary["pieces"] = pieces;
        } else {
          std::uint64_t tokens = 0;
          for (const auto& d : corpus::load_corpus(input)) {
            const auto ids = model.encode(d.text);
            tokens += ids.size();
            records.push_back({{"id", d.id}, {"ids", ids}});
          }
          summary["documents"] = records.size();
          summary["tokens"] = tokens;
        }
        write_jsonl(ctx->out_dir / "ids.jsonl", records);
        return summary;
      }));

  ops.push_back(make_op(
      "tok-sweep", "RIC/REC of merged tokenizers across vocabulary sizes, with the knee point",
      concat<ParamDoc>({{"input", ParamKind::kPath, "corpus store", true},
                        {"base", ParamKind::kPath, "base vocab file", true},
                        {"sizes", ParamKind::kIntList, "ascending vocabulary sizes", true},
                        {"embed_dim", ParamKind::kInt, "embedding width for REC (128)"},
                        {"nested", ParamKind::kBool, "prune one max-size model down (default true)"}},
                       std::vector<ParamDoc>(kTrainerParams.begin() + 1, kTrainerParams.end())),
      {"sweep.tsv", "report.json"}, [](ParamReader& r, const OpContext* ctx) -> Json {
        const auto input = r.path("input");
        const auto base_path = r.path("base");
        tokenizer::SweepConfig c;
        for (const auto s : r.int_list("sizes")) {
          r.check(s >= 1, "sizes", "must be positive");
          c.sizes.push_back(static_cast<std::size_t>(std::max<std::int64_t>(s, 1)));
        }
        r.check(!c.sizes.empty() || !r.has("sizes"), "sizes", "must not be empty");
        r.check(std::is_sorted(c.sizes.begin(), c.sizes.end()), "sizes", "must be ascending");
        c.embed_dim = static_cast<std::size_t>(positive_int(r, "embed_dim", 128));
        c.nested = r.boolean("nested", true);
        c.trainer = trainer_config(r, false);
        if (!ready(r, ctx)) return {};
        const auto res = tokenizer::vocab_sweep(load_texts(input), tokenizer::SubwordModel::load(base_path), c);
        write_file(ctx->out_dir / "sweep.tsv", tokenizer::sweep_table(res));
        const Json summary{{"knee_size", res.rows.empty() ? 0 : res.rows[res.knee].size}, {"rows", res.rows.size()}};
        write_json(ctx->out_dir / "report.json", summary);
        return summary;
      }));

  ops.push_back(make_op(
      "tok-hist", "token frequency histogram",
      {{"model", ParamKind::kPath, "vocab file", true},
       {"input", ParamKind::kPath, "corpus store", true},
       {"base_size", ParamKind::kInt, "ids at or above this count as appended (optional)"}},
      {"hist.tsv", "report.json"}, [](ParamReader& r, const OpContext* ctx) -> Json {
        const auto model_path = r.path("model");
        const auto input = r.path("input");
        const auto base_size = r.integer("base_size", -1);
        r.check(base_size >= -1, "base_size", "must be >= 0");
        if (!ready(r, ctx)) return {};
        const auto model = tokenizer::SubwordModel::load(model_path);
        const auto counts = tokenizer::token_histogram(model, load_texts(input));
        write_file(ctx->out_dir / "hist.tsv", tokenizer::histogram_table(model, counts));
        std::uint64_t total = 0, appended = 0;
        for (std::size_t i = 0; i < counts.size(); ++i) {
          total += counts[i];
          if (base_size >= 0 && i >= static_cast<std::size_t>(base_size)) appended += counts[i];
        }
        Json summary{{"tokens", total}};
        if (base_size >= 0) summary["appended_mass"] = total == 0 ? 0.0 : static_cast<double>(appended) / total;
        write_json(ctx->out_dir / "report.json", summary);
        return summary;
      }));

  ops.push_back(make_op(
      "tok-ratio", "token ratio (new / base) per dataset and on average",
      {{"new", ParamKind::kPath, "candidate vocab file", true},
       {"base", ParamKind::kPath, "base vocab file", true},
       {"datasets", ParamKind::kPathList, "corpus stores; each file is one dataset named by its stem", true}},
      {"ratio.json"}, [](ParamReader& r, const OpContext* ctx) -> Json {
        const auto new_path = r.path("new");
        const auto base_path = r.path("base");
        const auto datasets = r.paths("datasets");
        r.check(!datasets.empty() || !r.has("datasets"), "datasets", "must not be empty");
        if (!ready(r, ctx)) return {};
        std::vector<tokenizer::NamedCorpus> named;
        for (const auto& p : datasets) named.push_back({p.parent_path().filename().string() + "/" + p.stem().string(), load_texts(p)});
        const auto rep = tokenizer::token_ratio(tokenizer::SubwordModel::load(new_path),
                                                tokenizer::SubwordModel::load(base_path), named);
        Json per = Json::array();
        for (const auto& [name, tr] : rep.per_dataset) per.push_back({{"dataset", name}, {"tr", tr}});
        const Json summary{{"per_dataset", per}, {"average_tr", rep.average_tr}};
        write_json(ctx->out_dir / "ratio.json", summary);
        return summary;
      }));

  ops.push_back(make_op(
      "train-pretrain-base", "train a fresh toy model on base-tokenizer text",
      {{"tokenizer", ParamKind::kPath, "base vocab file", true},
       {"train", ParamKind::kPath, "training corpus store", true},
       {"eval", ParamKind::kPath, "eval corpus store", true},
       {"model", ParamKind::kJson, "model config {dim, layers, heads, ffn_mult, context, ...}; vocab comes from the tokenizer"},
       {"plan", ParamKind::kJson, "stage plan {peak_lr, warmup_ratio, max_steps, batch, eval_every, early_stop_patience}"},
       {"seed", ParamKind::kInt, "init and batch-order seed (default: step seed)"}},
      {"model.ckpt", "metrics.jsonl", "report.json"}, [](ParamReader& r, const OpContext* ctx) -> Json {
        const auto tok_path = r.path("tokenizer");
        const auto train_path = r.path("train");
        const auto eval_path = r.path("eval");
        train::ModelConfig mc;
        const Json mj = r.json("model", Json::object());
        r.guard([&] {
          mc = train::model_config_from_json(mj);
          if (mj.contains("vocab")) throw ConfigError("model", "vocab is taken from the tokenizer");
          auto probe = mc;
          probe.vocab = 1;
          train::validate(probe);
        });
        auto plan = stage_plan(r, "plan");
        plan.name = "full";
        const auto seed = seed_param(r, ctx);
        if (!ready(r, ctx)) return {};
        const auto tok = tokenizer::SubwordModel::load(tok_path);
        mc.vocab = static_cast<int>(tok.size());
        const auto train_samples = train::pack_samples(tok, load_texts(train_path), mc.context);
        const auto eval_samples = train::pack_samples(tok, load_texts(eval_path), mc.context);
        if (train_samples.empty()) throw DataError("training corpus packs to no sample");
        if (eval_samples.empty()) throw DataError("eval corpus packs to no sample");
        train::StageResult res;
        const auto model = train::pretrain_base(mc, train_samples, eval_samples, plan, seed, &res);
        train::save_checkpoint(ctx->out_dir / "model.ckpt", model, static_cast<std::uint64_t>(res.steps_run));
        write_metrics(ctx->out_dir / "metrics.jsonl", res.timeline);
        const auto final = train::evaluate(model, eval_samples);
        const Json summary{{"model", train::to_json(mc)},
                           {"parameters", train::parameter_count(mc)},
                           {"steps", res.steps_run},
                           {"train_samples", train_samples.size()},
                           {"eval", eval_json(final)}};
        write_json(ctx->out_dir / "report.json", summary);
        return summary;
      }));

  ops.push_back(make_op(
      "init-extend", "grow E and H of a checkpoint to the merged vocabulary",
      {{"model", ParamKind::kPath, "base checkpoint", true},
       {"base", ParamKind::kPath, "base vocab file", true},
       {"merged", ParamKind::kPath, "merged vocab file", true},
       {"method", ParamKind::kString, "random, avg_E, decomp_E, avg_EH or decomp_EH", true},
       {"random_scale", ParamKind::kReal, "sigma of random rows (0.02)"},
       {"sampled", ParamKind::kBool, "covariance-sampled averaging (default false)"},
       {"seed", ParamKind::kInt, "seed for random rows (default: step seed)"}},
      {"model.ckpt", "report.json"}, [](ParamReader& r, const OpContext* ctx) -> Json {
        const auto model_path = r.path("model");
        const auto base_path = r.path("base");
        const auto merged_path = r.path("merged");
        init::InitMethod method;
        r.guard([&] { method.variant = init::parse_variant(r.str("method", "random")); });
        method.random_scale = r.real("random_scale", method.random_scale);
        r.check(method.random_scale > 0.0, "random_scale", "must be positive");
        method.sampled = r.boolean("sampled", false);
        const auto seed = seed_param(r, ctx);
        if (!ready(r, ctx)) return {};
        const auto model = train::load_checkpoint(model_path);
        const auto base = tokenizer::SubwordModel::load(base_path);
        check_model_matches(model, base, "base tokenizer");
        const auto ext =
            init::extend_vocab(model.embed, model.head, base, tokenizer::SubwordModel::load(merged_path), method, seed);
        const auto out = init::assemble(model, ext);
        train::save_checkpoint(ctx->out_dir / "model.ckpt", out, 0);
        const Json summary{{"method", init::to_string(method.variant)},
                           {"base_rows", ext.partition.base_rows},
                           {"rows", ext.partition.rows},
                           {"avg_fallback", ext.report.avg_fallback}};
        write_json(ctx->out_dir / "report.json", summary);
        return summary;
      }));

  ops.push_back(make_op(
      "init-compare", "initial eval loss and accuracy for each initialization method and seed",
      {{"model", ParamKind::kPath, "pretrained base checkpoint (see train-pretrain-base)", true},
       {"base", ParamKind::kPath, "base vocab file", true},
       {"merged", ParamKind::kPath, "merged vocab file", true},
       {"eval", ParamKind::kPath, "eval corpus store", true},
       {"methods", ParamKind::kStringList, "method names (default: all five)"},
       {"seeds", ParamKind::kIntList, "seeds (default: 0..9)"},
       {"random_scale", ParamKind::kReal, "sigma of random rows (0.02)"}},
      {"compare.tsv", "rows.jsonl"}, [](ParamReader& r, const OpContext* ctx) -> Json {
        const auto model_path = r.path("model");
        const auto base_path = r.path("base");
        const auto merged_path = r.path("merged");
        const auto eval_path = r.path("eval");
        const double scale = r.real("random_scale", 0.02);
        r.check(scale > 0.0, "random_scale", "must be positive");
        std::vector<init::InitMethod> methods;
        r.guard([&] {
          for (const auto& m : r.str_list("methods")) methods.push_back({init::parse_variant(m), scale});
        });
        if (methods.empty()) {
          for (const auto v : init::all_variants()) methods.push_back({v, scale});
        }
        std::vector<std::uint64_t> seeds;
        for (const auto s : r.int_list("seeds")) {
          r.check(s >= 0, "seeds", "must be non-negative");
          seeds.push_back(static_cast<std::uint64_t>(std::max<std::int64_t>(s, 0)));
        }
        if (seeds.empty()) {
          for (std::uint64_t s = 0; s < 10; ++s) seeds.push_back(s);
        }
        if (!ready(r, ctx)) return {};
        const auto model = train::load_checkpoint(model_path);
        const auto base = tokenizer::SubwordModel::load(base_path);
        check_model_matches(model, base, "base tokenizer");
        const auto res = init::init_compare(model, base, tokenizer::SubwordModel::load(merged_path),
                                            load_texts(eval_path), methods, seeds);
        write_file(ctx->out_dir / "compare.tsv", init::compare_table(res));
        std::vector<Json> rows;
        for (const auto& row : res.rows) {
          rows.push_back({{"method", row.method}, {"seed", row.seed}, {"loss", row.loss}, {"accuracy", row.accuracy}});
        }
        write_jsonl(ctx->out_dir / "rows.jsonl", rows);
        Json summary = Json::array();
        for (const auto& s : res.summary) summary.push_back({{"method", s.method}, {"loss", s.mean_loss}, {"accuracy", s.mean_accuracy}});
        return summary;
      }));

  const std::vector<ParamDoc> model_data_params = {
      {"model", ParamKind::kPath, "checkpoint", true},
      {"tokenizer", ParamKind::kPath, "vocab file matching the checkpoint", true},
      {"train", ParamKind::kPath, "training corpus store", true},
      {"eval", ParamKind::kPath, "eval corpus store", true},
      {"lora", ParamKind::kJson, "adapter config {rank, alpha, targets} for lora_all stages"},
      {"seed", ParamKind::kInt, "batch-order and adapter seed (default: step seed)"},
  };

  ops.push_back(make_op(
      "train-stage", "train one stage plan on a checkpoint",
      concat<ParamDoc>(model_data_params,
                       {{"plan", ParamKind::kJson,
                         "stage plan {name, peak_lr, warmup_ratio, max_steps, batch, eval_every, early_stop_patience}",
                         true}}),
      {"model.ckpt", "metrics.jsonl", "report.json"}, [](ParamReader& r, const OpContext* ctx) -> Json {
        const auto model_path = r.path("model");
        const auto tok_path = r.path("tokenizer");
        const auto train_path = r.path("train");
        const auto eval_path = r.path("eval");
        const auto lora = lora_config(r);
        const auto plan = stage_plan(r, "plan");
        const auto seed = seed_param(r, ctx);
        if (!ready(r, ctx)) return {};
        auto model = train::load_checkpoint(model_path);
        const auto tok = tokenizer::SubwordModel::load(tok_path);
        check_model_matches(model, tok, "tokenizer");
        const auto train_samples = train::pack_samples(tok, load_texts(train_path), model.config.context);
        const auto eval_samples = train::pack_samples(tok, load_texts(eval_path), model.config.context);
        if (train_samples.empty()) throw DataError("training corpus packs to no sample");
        train::PipelineOptions opts;
        opts.lora = lora;
        opts.seed = seed;
        const auto rep = train::run_pipeline(model, train_samples, eval_samples, {plan}, opts);
        train::save_checkpoint(ctx->out_dir / "model.ckpt", model, static_cast<std::uint64_t>(rep.stages[0].result.steps_run));
        write_metrics(ctx->out_dir / "metrics.jsonl", rep.timeline());
        const Json summary{{"stage", plan.name},
                           {"steps", rep.stages[0].result.steps_run},
                           {"early_stopped", rep.stages[0].result.early_stopped},
                           {"trainable_fraction", rep.stages[0].result.trainable_fraction},
                           {"initial", eval_json(rep.initial)},
                           {"final", eval_json(rep.final)}};
        write_json(ctx->out_dir / "report.json", summary);
        return summary;
      }));

  ops.push_back(make_op(
      "train-pipeline", "run the Ex1 or Ex2 stage recipe",
      concat<ParamDoc>(model_data_params,
                       {{"recipe", ParamKind::kString, "'ex1' (default) or 'ex2'"},
                        {"total_steps", ParamKind::kInt, "steps split across stages (1000)"},
                        {"lr_high", ParamKind::kReal, "embed/head and LoRA peak lr (1e-3)"},
                        {"lr_low", ParamKind::kReal, "layer-stage peak lr (1.5e-4)"},
                        {"warmup_ratio", ParamKind::kReal, "per-stage warmup ratio (0.03)"},
                        {"batch", ParamKind::kInt, "sequences per batch (16)"},
                        {"eval_every", ParamKind::kInt, "steps between evals (50)"},
                        {"early_stop_patience", ParamKind::kInt, "evals without improvement (3, 0 = off)"},
                        {"stages", ParamKind::kJson, "explicit list of stage plans, replacing the recipe"}}),
      {"model.ckpt", "metrics.jsonl", "report.json"}, [](ParamReader& r, const OpContext* ctx) -> Json {
        const auto model_path = r.path("model");
        const auto tok_path = r.path("tokenizer");
        const auto train_path = r.path("train");
        const auto eval_path = r.path("eval");
        train::RecipeConfig rc;
        r.guard([&] { rc.recipe = train::parse_recipe(r.str("recipe", "ex1")); });
        rc.total_steps = r.integer("total_steps", rc.total_steps);
        r.check(rc.total_steps >= 0, "total_steps", "must be >= 0");
        rc.lr_high = r.real("lr_high", rc.lr_high);
        r.check(rc.lr_high > 0.0, "lr_high", "must be positive");
        rc.lr_low = r.real("lr_low", rc.lr_low);
        r.check(rc.lr_low > 0.0, "lr_low", "must be positive");
        rc.warmup_ratio = r.real("warmup_ratio", rc.warmup_ratio);
        r.check(rc.warmup_ratio >= 0.0 && rc.warmup_ratio < 1.0, "warmup_ratio", "must be in [0, 1)");
        rc.batch = positive_int(r, "batch", rc.batch);
        rc.eval_every = positive_int(r, "eval_every", rc.eval_every);
        rc.early_stop_patience = static_cast<int>(r.integer("early_stop_patience", rc.early_stop_patience));
        r.check(rc.early_stop_patience >= 0, "early_stop_patience", "must be >= 0");
        rc.lora = lora_config(r);
        std::vector<train::StagePlan> stages;
        const Json explicit_stages = r.json("stages", Json());
        r.guard([&] {
          if (explicit_stages.is_null()) return;
          if (!explicit_stages.is_array()) throw ConfigError("stages", "expected a list of stage plans");
          for (const auto& s : explicit_stages) {
            stages.push_back(train::stage_plan_from_json(s));
            train::validate(stages.back());
          }
        });
        const auto seed = seed_param(r, ctx);
        if (!ready(r, ctx)) return {};
        if (explicit_stages.is_null()) stages = train::recipe_stages(rc);
        auto model = train::load_checkpoint(model_path);
        const auto tok = tokenizer::SubwordModel::load(tok_path);
        check_model_matches(model, tok, "tokenizer");
        const auto train_samples = train::pack_samples(tok, load_texts(train_path), model.config.context);
        const auto eval_samples = train::pack_samples(tok, load_texts(eval_path), model.config.context);
        if (train_samples.empty()) throw DataError("training corpus packs to no sample");
        train::PipelineOptions opts;
        opts.lora = rc.lora;
        opts.seed = seed;
        const auto rep = train::run_pipeline(model, train_samples, eval_samples, stages, opts);
        std::int64_t steps = 0;
        Json per_stage = Json::array();
        for (const auto& s : rep.stages) {
          steps += s.result.steps_run;
          per_stage.push_back({{"plan", train::to_json(s.plan)},
                               {"steps", s.result.steps_run},
                               {"early_stopped", s.result.early_stopped},
                               {"trainable_fraction", s.result.trainable_fraction}});
        }
        train::save_checkpoint(ctx->out_dir / "model.ckpt", model, static_cast<std::uint64_t>(steps));
        write_metrics(ctx->out_dir / "metrics.jsonl", rep.timeline());
        const Json summary{{"recipe", explicit_stages.is_null() ? train::to_string(rc.recipe) : "custom"},
                           {"initial", eval_json(rep.initial)},
                           {"final", eval_json(rep.final)},
                           {"stages", per_stage}};
        write_json(ctx->out_dir / "report.json", summary);
        return summary;
      }));

  ops.push_back(make_op(
      "train-eval", "mean cross-entropy and accuracy of a checkpoint on a corpus",
      {{"model", ParamKind::kPath, "checkpoint", true},
       {"tokenizer", ParamKind::kPath, "vocab file matching the checkpoint", true},
       {"eval", ParamKind::kPath, "eval corpus store", true}},
      {"eval.json"}, [](ParamReader& r, const OpContext* ctx) -> Json {
        const auto model_path = r.path("model");
        const auto tok_path = r.path("tokenizer");
        const auto eval_path = r.path("eval");
        if (!ready(r, ctx)) return {};
        const auto model = train::load_checkpoint(model_path);
        const auto tok = tokenizer::SubwordModel::load(tok_path);
        check_model_matches(model, tok, "tokenizer");
        const auto res = train::evaluate_clm(model, load_texts(eval_path), tok);
        write_json(ctx->out_dir / "eval.json", eval_json(res));
        return eval_json(res);
      }));

  return ops;
}

}  // namespace

const std::vector<OpSpec>& op_table() {
  static const std::vector<OpSpec> table = build_table();
  return table;
}

const OpSpec* find_op(std::string_view name) {
  for (const auto& op : op_table()) {
    if (op.name == name) return &op;
  }
  return nullptr;
}

Json run_op(const OpSpec& op, const Json& params, const OpContext& ctx) {
  ParamReader reader(params, op.params, -1);
  fs::create_directories(ctx.out_dir);
  return op.run(reader, ctx);
}

}  // namespace langadapt::orchestrator
