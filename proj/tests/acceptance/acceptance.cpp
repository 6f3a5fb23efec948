// SPDX-License-Identifier: Apache-2.0
// Acceptance checks. Prints one PASS/FAIL line per criterion.
//
//   acceptance <demo-config.json> [--strict]
//
// Exit status is 0 once every criterion has been evaluated; --strict also
// fails on any FAIL line. A criterion that throws is reported as FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include <fmt/format.h>

#include "langadapt/common/io.hpp"
#include "langadapt/common/rng.hpp"
#include "langadapt/common/utf8.hpp"
#include "langadapt/corpus/dedup.hpp"
#include "langadapt/corpus/ngram_lm.hpp"
#include "langadapt/corpus/ppl_filter.hpp"
#include "langadapt/init/compare.hpp"
#include "langadapt/orchestrator/run.hpp"
#include "langadapt/orchestrator/synth.hpp"
#include "langadapt/tokenizer/merge.hpp"
#include "langadapt/tokenizer/metrics.hpp"
#include "langadapt/tokenizer/unigram_trainer.hpp"
#include "langadapt/train/data.hpp"
#include "langadapt/train/lora.hpp"
#include "langadapt/train/optimizer.hpp"
#include "langadapt/train/pipeline.hpp"
#include "langadapt/train/schedule.hpp"

using namespace langadapt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <typename T>
void scramble(train::ModelParams<T>& p, std::uint64_t seed, double stddev) {
  Rng rng(seed);
  for (const auto& name : p.tensor_names()) {
    auto& m = p.tensor(name);
    const bool norm = name.find("norm") != std::string::npos;
    for (Eigen::Index i = 0; i < m.size(); ++i)
      m.data()[i] = static_cast<T>((norm ? 1.0 : 0.0) + rng.normal(0.0, norm ? 0.2 : stddev));
  }
}

train::Batch random_batch(Rng& rng, int b, int t, int vocab) {
  train::Batch out(b, std::vector<int>(t));
  for (auto& s : out)
    for (auto& id : s) id = static_cast<int>(rng.uniform_int(vocab));
  return out;
}

// ---------------------------------------------------------------- trainer

Outcome gradient_oracle() {
  const auto t0 = Clock::now();
  train::ModelConfig cfg;
  cfg.vocab = 16;
  cfg.dim = 8;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.context = 8;
  auto p = train::build_model<double>(cfg, 5);
  train::LoraConfig lc;
  lc.rank = 2;
  train::lora_attach(p, lc, 9);
  scramble(p, 17, 0.3);
  Rng rng(2);
  const auto batch = random_batch(rng, 2, 6, cfg.vocab);
  const auto lg = train::backward(p, batch);
  const double h = 1e-5;
  std::size_t checked = 0, bad = 0;
  double worst = 0.0;
  for (const auto& name : p.tensor_names()) {
    auto& w = p.tensor(name);
    const auto& g = lg.grads.at(name);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double orig = w.data()[i];
      w.data()[i] = orig + h;
      const double up = train::forward_loss(p, batch).loss;
      w.data()[i] = orig - h;
      const double down = train::forward_loss(p, batch).loss;
      w.data()[i] = orig;
      const double numeric = (up - down) / (2 * h);
      const double analytic = g.data()[i];
      const double scale = std::max(std::abs(numeric), std::abs(analytic));
      const double diff = std::abs(numeric - analytic);
      // Relative, with an absolute floor for entries at the finite-difference noise level.
      bad += diff > 1e-4 * scale + 1e-9;
      if (scale > 1e-6) worst = std::max(worst, diff / scale);
      ++checked;
    }
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && checked == p.total_parameters() && secs < 60.0,
          fmt::format("{} entries, worst relative error {:.2e}, {:.1f}s", checked, worst, secs)};
}

Outcome freeze_integrity() {
  train::ModelConfig cfg;
  cfg.vocab = 24;
  cfg.dim = 16;
  cfg.layers = 4;
  cfg.heads = 2;
  cfg.context = 12;
  const int base_rows = 16;
  Rng rng(3);
  std::vector<train::Sample> train_set, eval_set;
  for (int i = 0; i < 40; ++i) train_set.push_back(random_batch(rng, 1, 12, cfg.vocab)[0]);
  for (int i = 0; i < 4; ++i) eval_set.push_back(random_batch(rng, 1, 12, cfg.vocab)[0]);

  const auto frozen_expected = [](const std::string& plan, const std::string& name) {
    const bool adapter = name.find(".lora_") != std::string::npos;
    if (plan == "full") return adapter;  // no adapters attached for full
    if (plan == "embed_head" || plan == "new_embed_head") return name != "embed" && name != "head";
    if (plan == "lora_all") return !adapter;
    if (name.rfind("blocks.", 0) != 0 || adapter) return true;
    const int layer = std::stoi(name.substr(7));
    return (layer % 2 == 1) != (plan == "odd_layers");
  };
  const auto rows_hash = [](const MatrixF& m, int n) { return train::tensor_hash(MatrixF(m.topRows(n))); };

  std::vector<std::string> notes;
  bool ok = true;
  for (const auto& plan_name : train::stage_names()) {
    auto p = train::build_model<float>(cfg, 1);
    p.partition.base_rows = base_rows;
    if (plan_name == "lora_all") {
      train::LoraConfig lc;
      lc.rank = 2;
      train::lora_attach(p, lc, 4);
    }
    std::map<std::string, std::string> before;
    for (const auto& n : p.tensor_names()) before[n] = train::tensor_hash(p.tensor(n));
    const auto embed_rows = rows_hash(p.embed, base_rows), head_rows = rows_hash(p.head, base_rows);

    train::StagePlan plan;
    plan.name = plan_name;
    plan.max_steps = 50;
    plan.batch = 4;
    plan.eval_every = 50;
    plan.peak_lr = 1e-2;
    plan.early_stop_patience = 0;
    train::train_stage(p, train_set, eval_set, plan, train::StageOptions{});

    std::size_t frozen = 0, changed = 0, violations = 0;
    for (const auto& n : p.tensor_names()) {
      const bool same = train::tensor_hash(p.tensor(n)) == before.at(n);
      if (frozen_expected(plan_name, n)) {
        ++frozen;
        violations += !same;
      } else {
        changed += !same;
      }
    }
    if (plan_name == "new_embed_head") {
      violations += rows_hash(p.embed, base_rows) != embed_rows;
      violations += rows_hash(p.head, base_rows) != head_rows;
    }
    ok = ok && violations == 0 && changed > 0;
    notes.push_back(fmt::format("{} {}/{}", plan_name, frozen - violations, frozen));
  }
  std::string detail = "frozen tensors unchanged:";
  for (const auto& n : notes) detail += " " + n;
  return {ok, detail};
}

Outcome lora_equivalence() {
  train::ModelConfig cfg;
  cfg.vocab = 32;
  cfg.dim = 16;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.context = 10;
  auto p = train::build_model<float>(cfg, 2);
  scramble(p, 3, 0.2);
  Rng rng(4);
  const auto batch = random_batch(rng, 3, 10, cfg.vocab);
  const auto before = train::forward_loss(p, batch, true).logits;
  train::LoraConfig lc;
  lc.rank = 4;
  train::lora_attach(p, lc, 5);
  const bool exact = train::forward_loss(p, batch, true).logits == before;

  train::apply_stage_mask(p, "lora_all");
  train::AdamW<float> opt;
  for (int i = 0; i < 30; ++i) opt.step(p, train::backward(p, batch).grads, 1e-2);
  const auto adapted = train::forward_loss(p, batch, true).logits;
  const double moved = (adapted - before).cwiseAbs().maxCoeff();
  train::lora_merge(p);
  const double diff = (train::forward_loss(p, batch, true).logits - adapted).cwiseAbs().maxCoeff();
  return {exact && moved > 1e-3 && diff <= 1e-6,
          fmt::format("attach exact: {}; training moved logits by {:.3g}; merged vs adapted max-abs {:.2e}",
                      exact ? "yes" : "no", moved, diff)};
}

// ---------------------------------------------------------------- toy testbed

// English-heavy base model and tokenizer, a Korean tokenizer merged onto it,
// and mixed-language eval text. The adaptation corpus is large enough that the
// ablation budget stays near one pass over it.
struct Testbed {
  std::vector<std::string> base_texts, eval_texts, korean, adapt;
  tokenizer::SubwordModel base, added, merged;
  train::ModelParams<float> model;
};

std::vector<std::string> texts_of(const std::vector<orchestrator::SynthDoc>& docs) {
  std::vector<std::string> out;
  for (const auto& d : docs) out.push_back(d.text);
  return out;
}

const Testbed& testbed() {
  static const Testbed tb = [] {
    Testbed t;
    orchestrator::SynthConfig sc;
    sc.seed = 11;
    const auto bundle = orchestrator::synth_bundle(sc);
    t.base_texts = texts_of(bundle.base);
    t.eval_texts = texts_of(bundle.eval);
    Rng rng(derive_seed(11, 3));
    for (int i = 0; i < 300; ++i) t.korean.push_back(orchestrator::korean_document(rng, 5));
    Rng adapt_rng(derive_seed(11, 4));
    for (int i = 0; i < 4000; ++i) {
      t.adapt.push_back(i % 4 == 3 ? orchestrator::english_document(adapt_rng, 5)
                                   : orchestrator::korean_document(adapt_rng, 5));
    }

    tokenizer::UnigramTrainerConfig bc;
    bc.byte_fallback = true;
    bc.target_vocab = tokenizer::coverage_floor(t.base_texts, true) + 100;
    t.base = tokenizer::train_unigram(t.base_texts, bc);
    tokenizer::UnigramTrainerConfig nc;
    nc.target_vocab = tokenizer::coverage_floor(t.korean, false) + 150;
    t.added = tokenizer::train_unigram(t.korean, nc);
    t.merged = tokenizer::merge(t.base, t.added).model;

    train::ModelConfig mc;
    mc.vocab = static_cast<int>(t.base.size());
    mc.dim = 48;
    mc.layers = 4;
    mc.heads = 4;
    mc.context = 32;
    train::StagePlan plan;
    plan.max_steps = 300;
    plan.batch = 8;
    plan.eval_every = 300;
    plan.early_stop_patience = 0;
    plan.peak_lr = 3e-3;
    t.model = train::pretrain_base(mc, train::pack_samples(t.base, t.base_texts, mc.context),
                                   train::pack_samples(t.base, t.eval_texts, mc.context), plan, 5);
    return t;
  }();
  return tb;
}

Outcome init_ordering() {
  const auto t0 = Clock::now();
  const auto& tb = testbed();
  std::vector<init::InitMethod> methods;
  for (const auto v : init::all_variants()) methods.push_back({v});
  std::vector<std::uint64_t> seeds(10);
  std::iota(seeds.begin(), seeds.end(), 0);
  const auto res = init::init_compare(tb.model, tb.base, tb.merged, tb.eval_texts, methods, seeds);

  std::map<std::string, std::map<std::uint64_t, double>> loss;
  for (const auto& r : res.rows) loss[r.method][r.seed] = r.loss;
  int good = 0;
  for (const auto s : seeds) {
    const double eh = std::max(loss["avg_EH"][s], loss["decomp_EH"][s]);
    const double other = std::min({loss["random"][s], loss["avg_E"][s], loss["decomp_E"][s]});
    good += eh < other;
  }
  std::string means;
  for (const auto& s : res.summary) means += fmt::format(" {}={:.3f}", s.method, s.mean_loss);
  const double secs = seconds_since(t0);
  return {good >= 9 && secs < 900.0,
          fmt::format("E+H below every E-only/random method in {}/10 seeds; mean loss{}; {:.0f}s", good, means, secs)};
}

// Closed-form parameter counts of the transformer.
std::uint64_t closed_form_total(const train::ModelConfig& c) {
  const std::uint64_t v = c.vocab, d = c.dim, f = c.ffn_dim(), l = c.layers;
  return 2 * v * d + l * (4 * d * d + 3 * f * d + 2 * d) + d;
}

Outcome ex1_ex2() {
  const auto t0 = Clock::now();
  const auto& tb = testbed();
  const int ctx = tb.model.config.context;
  const auto train_samples = train::pack_samples(tb.merged, tb.adapt, ctx);
  const auto eval_samples = train::pack_samples(tb.merged, tb.eval_texts, ctx);
  const auto ext = init::extend_vocab(tb.model.embed, tb.model.head, tb.base, tb.merged,
                                      {init::InitVariant::kDecompEH}, 0);

  int wins = 0;
  double frac1[2] = {0, 0};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    double final_loss[2];
    for (int r = 0; r < 2; ++r) {
      auto p = init::assemble(tb.model, ext);
      train::RecipeConfig rc;
      rc.recipe = r == 0 ? train::Recipe::kEx1 : train::Recipe::kEx2;
      rc.total_steps = 400;
      rc.batch = 8;
      rc.eval_every = 400;
      rc.early_stop_patience = 0;
      train::PipelineOptions po;
      po.seed = seed;
      const auto rep = train::run_pipeline(p, train_samples, eval_samples, train::recipe_stages(rc), po);
      final_loss[r] = rep.final.loss;
      frac1[r] = rep.stages.front().result.trainable_fraction;
    }
    wins += final_loss[0] <= final_loss[1];
  }

  auto cfg = tb.model.config;
  cfg.vocab = static_cast<int>(tb.merged.size());
  const auto total = closed_form_total(cfg);
  const double ex1_expected = static_cast<double>(2ull * cfg.vocab * cfg.dim) / static_cast<double>(total);
  const double ex2_expected =
      static_cast<double>(2ull * (tb.merged.size() - tb.base.size()) * cfg.dim) / static_cast<double>(total);
  const bool fractions = frac1[0] == ex1_expected && frac1[1] == ex2_expected && frac1[1] < frac1[0];
  return {wins >= 7 && fractions,
          fmt::format("Ex1 final loss <= Ex2 in {}/10 seeds ({} samples, 400 steps of 8); stage-1 fraction Ex1 {:.4f} Ex2 {:.4f} (closed form "
                      "{:.4f} / {:.4f}); {:.0f}s",
                      wins, train_samples.size(), frac1[0], frac1[1], ex1_expected, ex2_expected, seconds_since(t0))};
}

// ---------------------------------------------------------------- end-to-end demo

struct DemoRun {
  Json manifest;
  fs::path root;
  double seconds = 0.0;
};

DemoRun run_demo(const fs::path& config, const fs::path& run_dir) {
  auto cfg = orchestrator::load_run_config(config);
  cfg.run_dir = run_dir;
  const auto t0 = Clock::now();
  const auto out = orchestrator::execute(cfg, fs::absolute(config).parent_path());
  return {out.manifest, out.root, seconds_since(t0)};
}

const Json* find_step(const Json& manifest, const std::string& op) {
  for (const auto& s : manifest["steps"]) {
    if (s["op"] == op) return &s;
  }
  return nullptr;
}

Outcome staged_learning(const DemoRun& run) {
  const Json* adapt = find_step(run.manifest, "train-pipeline");
  const Json* merge = find_step(run.manifest, "tok-merge");
  if (run.manifest["status"] != "ok" || adapt == nullptr || merge == nullptr) {
    return {false, "demo run did not complete"};
  }
  const double initial = (*adapt)["summary"]["initial"]["loss"];
  const double final_loss = (*adapt)["summary"]["final"]["loss"];
  const double acc = (*adapt)["summary"]["final"]["accuracy"];
  const double v = (*merge)["summary"]["merged_size"];
  const double drop = 1.0 - final_loss / initial;
  return {drop >= 0.2 && acc > 1.0 / v && run.seconds < 1800.0,
          fmt::format("eval loss {:.3f} -> {:.3f} ({:.1f}% drop); accuracy {:.3f} vs 1/V {:.5f}; demo {:.0f}s", initial,
                      final_loss, 100 * drop, acc, 1.0 / v, run.seconds)};
}

Outcome reproducibility(const DemoRun& a, const DemoRun& b) {
  const auto hashes = [](const Json& m) {
    std::vector<std::string> out;
    for (const auto& s : m["steps"])
      for (const auto& o : s["outputs"]) out.push_back(o["path"].get<std::string>() + " " + o["sha256"].get<std::string>());
    return out;
  };
  const auto ha = hashes(a.manifest), hb = hashes(b.manifest);
  const bool ok = a.manifest["status"] == "ok" && b.manifest["status"] == "ok" && !ha.empty() && ha == hb &&
                  a.manifest["config_hash"] == b.manifest["config_hash"] && a.root != b.root;
  std::size_t differing = 0;
  for (std::size_t i = 0; i < std::min(ha.size(), hb.size()); ++i) differing += ha[i] != hb[i];
  return {ok, fmt::format("{} artifacts over {} steps, {} differ between the two runs", ha.size(),
                          a.manifest["steps"].size(), differing + (ha.size() > hb.size() ? ha.size() - hb.size() : hb.size() - ha.size()))};
}

// ---------------------------------------------------------------- tokenizer

Outcome tokenizer_direction() {
  const auto& tb = testbed();
  const auto ric = tokenizer::complexity_ratios(tb.merged, tb.base, tb.korean, 128);
  const double tr = static_cast<double>(tokenizer::count_tokens(tb.merged, tb.korean)) /
                    static_cast<double>(tokenizer::count_tokens(tb.base, tb.korean));

  tokenizer::SweepConfig sc;
  const std::size_t floor = tokenizer::coverage_floor(tb.korean, false);
  for (const std::size_t extra : {0, 40, 80, 150, 250}) sc.sizes.push_back(floor + extra);
  sc.nested = true;
  const auto sweep = tokenizer::vocab_sweep(tb.korean, tb.base, sc);
  bool ric_ok = true, rec_ok = true;
  std::string rows;
  for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
    rows += fmt::format(" {}:{:.3f}/{:.3f}", sweep.rows[i].size, sweep.rows[i].merged.ric, sweep.rows[i].merged.rec);
    if (i == 0) continue;
    ric_ok = ric_ok && sweep.rows[i].merged.ric <= sweep.rows[i - 1].merged.ric;
    rec_ok = rec_ok && sweep.rows[i].merged.rec > sweep.rows[i - 1].merged.rec;
  }
  return {tr < 1.0 && ric.ric < 1.0 && ric_ok && rec_ok && sweep.rows.size() == sc.sizes.size(),
          fmt::format("TR {:.3f}, RIC {:.3f}; sweep size:RIC/REC{}", tr, ric.ric, rows)};
}

// Best total score over all segmentations of `s` into pieces of `vocab`.
double brute_force_best(const std::u32string& s, const std::map<std::u32string, double>& vocab) {
  double best = -std::numeric_limits<double>::infinity();
  const std::size_t n = s.size();
  // Bit i of `cuts` set: a boundary after codepoint i.
  for (std::uint32_t cuts = 0; cuts < (1u << (n - 1)); ++cuts) {
    double total = 0.0;
    std::size_t start = 0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (i + 1 == n || (cuts >> i & 1u)) {
        const auto it = vocab.find(s.substr(start, i + 1 - start));
        if (it == vocab.end()) ok = false;
        else total += it->second;
        start = i + 1;
      }
    }
    if (ok) best = std::max(best, total);
  }
  return best;
}

Outcome segmentation_oracle() {
  const std::u32string alphabet = U"ab한";
  std::size_t strings = 0, mismatches = 0;
  Rng rng(21);
  const int vocabularies = 6;
  for (int v = 0; v < vocabularies; ++v) {
    std::map<std::u32string, double> vocab;
    for (const char32_t c : alphabet) vocab[std::u32string(1, c)] = -2.0 - 3.0 * rng.uniform01();
    while (vocab.size() < 12) {
      std::u32string piece;
      const auto len = 2 + rng.uniform_int(3);
      for (std::uint64_t i = 0; i < len; ++i) piece += alphabet[rng.uniform_int(alphabet.size())];
      vocab.emplace(piece, -1.0 - 6.0 * rng.uniform01());
    }
    std::vector<std::pair<std::string, double>> normal;
    for (const auto& [p, s] : vocab) normal.push_back({utf8::encode(p), s});
    const auto model = tokenizer::SubwordModel::with_specials(normal, false);

    // Every string of length 1..8 over the alphabet.
    for (std::size_t len = 1; len <= 8; ++len) {
      std::vector<std::size_t> digits(len, 0);
      while (true) {
        std::u32string s;
        for (const auto d : digits) s += alphabet[d];
        const auto ids = model.encode(utf8::encode(s));
        double score = 0.0;
        std::u32string rebuilt;
        for (const int id : ids) {
          const auto piece = utf8::decode(model.piece(id).text);
          rebuilt += piece;
          score += vocab.at(piece);
        }
        const double best = brute_force_best(s, vocab);
        if (rebuilt != s || std::abs(score - best) > 1e-9 * std::max(1.0, std::abs(best))) ++mismatches;
        ++strings;
        std::size_t k = 0;
        while (k < len && ++digits[k] == alphabet.size()) digits[k++] = 0;
        if (k == len) break;
      }
    }
  }

  // Round trip on random UTF-8 over a byte-fallback model.
  const auto& base = testbed().base;
  const std::vector<std::pair<char32_t, char32_t>> ranges = {
      {0x20, 0x7E}, {0xA0, 0x24F}, {0x3131, 0x318E}, {0xAC00, 0xD7A3}, {0x4E00, 0x9FFF}, {0x1F300, 0x1FAFF}, {0x9, 0xA}};
  std::size_t round_trips = 0;
  for (int i = 0; i < 1000; ++i) {
    std::u32string s;
    const auto len = rng.uniform_int(40);
    for (std::uint64_t k = 0; k < len; ++k) {
      const auto& [lo, hi] = ranges[rng.uniform_int(ranges.size())];
      s += static_cast<char32_t>(lo + rng.uniform_int(hi - lo + 1));
    }
    const std::string text = utf8::encode(s);
    round_trips += base.decode(base.encode(text)) == text;
  }
  return {mismatches == 0 && round_trips == 1000,
          fmt::format("{} strings over {} vocabularies, {} differ from brute force; round trip {}/1000", strings,
                      vocabularies, mismatches, round_trips)};
}

// ---------------------------------------------------------------- corpus

std::set<std::u32string> string_shingles(const std::string& text, std::size_t n) {
  const auto cps = utf8::decode(text);
  std::set<std::u32string> out;
  for (std::size_t i = 0; i + n <= cps.size(); ++i) out.insert(cps.substr(i, n));
  return out;
}

double jaccard(const std::set<std::u32string>& a, const std::set<std::u32string>& b) {
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

Outcome dedup_oracle() {
  const double threshold = 0.8, band = 0.1;
  std::size_t fixtures = 0, agree = 0, docs_total = 0;
  for (std::uint64_t f = 0; f < 4; ++f) {
    Rng rng(derive_seed(31, f));
    std::vector<std::string> texts;
    std::vector<std::set<std::u32string>> sh;
    const auto fits = [&](const std::string& t) {
      const auto s = string_shingles(t, 5);
      for (const auto& other : sh) {
        if (std::abs(jaccard(s, other) - threshold) < band) return false;
      }
      texts.push_back(t);
      sh.push_back(s);
      return true;
    };
    while (texts.size() < 150) {
      const bool dup = !texts.empty() && rng.uniform01() < 0.3;
      std::string t;
      if (dup) {
        // One-word edit of an earlier document.
        const auto words = [&] {
          std::vector<std::string> w;
          std::size_t start = 0;
          const std::string& src = texts[rng.uniform_int(texts.size())];
          for (std::size_t i = 0; i <= src.size(); ++i) {
            if (i == src.size() || src[i] == ' ') {
              w.push_back(src.substr(start, i - start));
              start = i + 1;
            }
          }
          return w;
        }();
        auto w = words;
        w[rng.uniform_int(w.size())] = rng.uniform01() < 0.5 ? "river" : "바다";
        for (std::size_t i = 0; i < w.size(); ++i) t += (i ? " " : "") + w[i];
      } else {
        t = rng.uniform01() < 0.5 ? orchestrator::korean_document(rng, 10) : orchestrator::english_document(rng, 10);
      }
      fits(t);
    }
    corpus::Corpus c;
    for (std::size_t i = 0; i < texts.size(); ++i) c.push_back(corpus::make_document(i, texts[i], "fixture"));

    // Brute force: link pairs at or above the threshold, keep the earliest of each component.
    std::vector<std::size_t> parent(texts.size());
    std::iota(parent.begin(), parent.end(), 0);
    const std::function<std::size_t(std::size_t)> root = [&](std::size_t x) {
      return parent[x] == x ? x : parent[x] = root(parent[x]);
    };
    for (std::size_t i = 0; i < texts.size(); ++i)
      for (std::size_t j = i + 1; j < texts.size(); ++j)
        if (jaccard(sh[i], sh[j]) >= threshold) {
          const auto a = root(i), b = root(j);
          parent[std::max(a, b)] = std::min(a, b);
        }
    std::set<std::string> expected;
    for (std::size_t i = 0; i < texts.size(); ++i)
      if (root(i) == i) expected.insert(c[i].id);

    corpus::DedupConfig cfg;
    cfg.jaccard_threshold = threshold;
    const auto res = corpus::dedup(c, cfg);
    std::set<std::string> kept;
    for (const auto& d : res.corpus) kept.insert(d.id);
    ++fixtures;
    agree += kept == expected && expected.size() < texts.size();
    docs_total += texts.size();
  }
  return {agree == fixtures, fmt::format("{}/{} fixtures ({} documents) match the exact-Jaccard kept set", agree,
                                         fixtures, docs_total)};
}

Outcome perplexity_exactness() {
  double worst = 0.0;
  Rng rng(41);
  for (const std::size_t v : {2, 7, 50, 1000, 65536}) {
    const auto lm = corpus::NgramLM::uniform(v);
    for (int i = 0; i < 5; ++i) {
      std::u32string s;
      const auto len = 1 + rng.uniform_int(60);
      for (std::uint64_t k = 0; k < len; ++k) s += static_cast<char32_t>(0xAC00 + rng.uniform_int(200));
      const auto doc = corpus::make_document(0, utf8::encode(s), "t");
      worst = std::max(worst, std::abs(corpus::perplexity(lm, doc).ppl - static_cast<double>(v)) / static_cast<double>(v));
    }
  }

  // Percentile mode on documents whose perplexities are all distinct.
  std::vector<std::string> trusted;
  for (int i = 0; i < 50; ++i) trusted.push_back(orchestrator::korean_document(rng, 4));
  const auto lm = corpus::NgramLM::train(trusted, 3, 0.1);
  corpus::Corpus c;
  for (int i = 0; i < 37; ++i) {
    const std::string text = i % 3 == 0 ? orchestrator::english_document(rng, 2) : orchestrator::korean_document(rng, 1 + i % 4);
    c.push_back(corpus::make_document(i, text, "t"));
  }
  std::vector<std::pair<double, std::string>> scored;
  for (const auto& d : c) scored.push_back({corpus::perplexity(lm, d).ppl, d.id});
  std::sort(scored.begin(), scored.end());
  bool distinct = true;
  for (std::size_t i = 1; i < scored.size(); ++i) distinct = distinct && scored[i].first != scored[i - 1].first;

  std::size_t right = 0, cases = 0;
  for (const double p : {1.0, 10.0, 25.0, 33.3, 50.0, 75.0, 99.0, 100.0}) {
    const auto expected_count = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(c.size()) - 1e-9));
    std::set<std::string> expected;
    for (std::size_t i = 0; i < expected_count; ++i) expected.insert(scored[i].second);
    const auto res = corpus::ppl_filter(c, lm, corpus::PplMode::kPercentile, p);
    std::set<std::string> kept;
    for (const auto& d : res.corpus) kept.insert(d.id);
    ++cases;
    right += res.corpus.size() == expected_count && kept == expected;
  }
  return {worst <= 1e-9 && distinct && right == cases,
          fmt::format("uniform LM worst relative error {:.1e}; percentile counts exact in {}/{} cases", worst, right,
                      cases)};
}

Outcome schedule_exactness() {
  std::size_t cases = 0, exact = 0, mid_cases = 0;
  double worst_mid = 0.0;
  for (const auto& [steps, ratio] : std::vector<std::pair<std::int64_t, double>>{
           {100, 0.03}, {1000, 0.1}, {148320, 0.03}, {2, 0.5}, {997, 0.0}, {64, 0.25}}) {
    for (const double peak : {1e-3, 1.5e-4, 3.0}) {
      const auto w = train::warmup_steps(steps, ratio);
      const bool edges = train::cosine_lr(0, steps, ratio, peak) == (w == 0 ? peak : 0.0) &&
                         train::cosine_lr(w, steps, ratio, peak) == peak &&
                         train::cosine_lr(steps, steps, ratio, peak) == 0.0;
      if ((steps - w) % 2 == 0) {
        const double mid = train::cosine_lr(w + (steps - w) / 2, steps, ratio, peak);
        worst_mid = std::max(worst_mid, std::abs(mid - 0.5 * peak));
        ++mid_cases;
      }
      ++cases;
      exact += edges;
    }
  }
  return {exact == cases && mid_cases > 0 && worst_mid <= 1e-12,
          fmt::format("boundaries exact in {}/{} cases; worst midpoint error {:.1e} over {} cases", exact, cases,
                      worst_mid, mid_cases)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <demo-config.json> [--strict]\n");
    return 2;
  }
  const fs::path demo_config = argv[1];
  const bool strict = argc > 2 && std::string(argv[2]) == "--strict";
  const fs::path scratch = fs::temp_directory_path() / fmt::format("langadapt-acceptance-{}", ::getpid());

  std::optional<DemoRun> run_a, run_b;
  const auto demo = [&]() -> std::pair<const DemoRun&, const DemoRun&> {
    if (!run_a) {
      run_a = run_demo(demo_config, scratch / "a");
      run_b = run_demo(demo_config, scratch / "b");
    }
    return {*run_a, *run_b};
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient oracle", gradient_oracle},
      {"freeze integrity", freeze_integrity},
      {"lora equivalence", lora_equivalence},
      {"init ordering (E+H below E-only and random)", init_ordering},
      {"Ex1 vs Ex2 ablation", ex1_ex2},
      {"staged pipeline learning", [&] { return staged_learning(demo().first); }},
      {"tokenizer adaptation direction", tokenizer_direction},
      {"segmentation oracle", segmentation_oracle},
      {"dedup oracle", dedup_oracle},
      {"perplexity exactness", perplexity_exactness},
      {"schedule exactness", schedule_exactness},
      {"reproducibility", [&] {
         const auto [a, b] = demo();
         return reproducibility(a, b);
       }},
  };

  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::error_code ec;
  fs::remove_all(scratch, ec);
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return strict && failed > 0 ? 1 : 0;
}
