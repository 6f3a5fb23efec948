// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "langadapt/common/error.hpp"
#include "langadapt/common/rng.hpp"
#include "langadapt/common/utf8.hpp"
#include "langadapt/tokenizer/merge.hpp"
#include "langadapt/tokenizer/metrics.hpp"
#include "langadapt/tokenizer/refine.hpp"
#include "langadapt/tokenizer/subword_model.hpp"
#include "langadapt/tokenizer/unigram_trainer.hpp"

using namespace langadapt;
using namespace langadapt::tokenizer;

namespace {

// Best total score over every segmentation of s into normal pieces (exhaustive recursion).
double brute_force_best(const SubwordModel& m, const std::string& s) {
  if (s.empty()) return 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t len = 1; len <= s.size(); ++len) {
    const auto id = m.id_of(s.substr(0, len));
    if (!id || m.piece(*id).type != PieceType::kNormal) continue;
    best = std::max(best, m.piece(*id).score + brute_force_best(m, s.substr(len)));
  }
  return best;
}

SubwordModel chars_model(const std::vector<std::string>& chars, bool byte_fallback = false) {
  std::vector<std::pair<std::string, double>> normal;
  for (const auto& c : chars) normal.emplace_back(c, -1.0);
  return SubwordModel::with_specials(normal, byte_fallback);
}

std::string random_utf8(Rng& rng, std::size_t max_cps) {
  static const char32_t pools[][2] = {{0x20, 0x7E}, {0xAC00, 0xD7A3}, {0x0400, 0x04FF}, {0x1F300, 0x1F5FF}, {0x09, 0x0A}};
  std::u32string out;
  const std::size_t n = rng.uniform_int(max_cps + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pool = pools[rng.uniform_int(5)];
    out.push_back(pool[0] + static_cast<char32_t>(rng.uniform_int(pool[1] - pool[0] + 1)));
  }
  return utf8::encode(out);
}

}  // namespace

TEST_CASE("encode picks the higher-scoring path") {
  const auto m = SubwordModel::with_specials({{"a", -2.0}, {"b", -2.0}, {"ab", -1.0}}, false);
  const auto ids = m.encode("ab");
  REQUIRE(ids.size() == 1);
  CHECK(m.piece(ids[0]).text == "ab");
  CHECK(m.path_score(ids) == doctest::Approx(-1.0));
  CHECK(m.encode("").empty());
}

TEST_CASE("viterbi matches brute force on small vocabularies") {
  Rng rng(11);
  const std::vector<std::string> alphabet = {"a", "b", "c"};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<std::string, double>> normal;
    for (const auto& c : alphabet) normal.emplace_back(c, -1.0 - 4.0 * rng.uniform01());
    while (normal.size() < 12) {
      std::string p;
      const std::size_t len = 2 + rng.uniform_int(3);
      for (std::size_t i = 0; i < len; ++i) p += alphabet[rng.uniform_int(3)];
      if (std::none_of(normal.begin(), normal.end(), [&](const auto& e) { return e.first == p; }))
        normal.emplace_back(p, -1.0 - 6.0 * rng.uniform01());
    }
    const auto m = SubwordModel::with_specials(normal, false);
    for (int k = 0; k < 60; ++k) {
      std::string s;
      const std::size_t len = rng.uniform_int(9);
      for (std::size_t i = 0; i < len; ++i) s += alphabet[rng.uniform_int(3)];
      const auto ids = m.encode(s);
      CHECK(m.decode(ids) == s);
      CHECK(m.path_score(ids) == doctest::Approx(brute_force_best(m, s)).epsilon(1e-12));
    }
  }
}

TEST_CASE("byte fallback round trip") {
  const auto m = chars_model({"a", "b", " "}, true);
  SUBCASE("single multi-byte char becomes its byte triple") {
    const auto ids = m.encode("가");
    REQUIRE(ids.size() == 3);
    CHECK(ids[0] == *m.byte_id(0xEA));
    CHECK(ids[1] == *m.byte_id(0xB0));
    CHECK(ids[2] == *m.byte_id(0x80));
    CHECK(m.decode(ids) == "가");
  }
  SUBCASE("random strings") {
    Rng rng(5);
    for (int i = 0; i < 300; ++i) {
      const std::string s = random_utf8(rng, 20);
      CHECK(m.decode(m.encode(s)) == s);
    }
  }
}

TEST_CASE("without byte fallback uncovered chars map to unk") {
  const auto m = chars_model({"a"});
  const auto ids = m.encode("a가a");
  REQUIRE(ids.size() == 3);
  CHECK(ids[1] == kUnkId);
}

TEST_CASE("decode rejects out-of-range ids") {
  const auto m = chars_model({"a"});
  const std::vector<int> bad = {0, 999};
  CHECK_THROWS_WITH_AS(m.decode(bad), doctest::Contains("999"), DataError);
}

TEST_CASE("vocab file round trip keeps escapes and scores") {
  const auto m = SubwordModel::with_specials({{"a\tb", -0.1}, {"\\n", -1.0 / 3.0}, {"x\ny", -2.5}}, true);
  const auto back = SubwordModel::parse(m.serialize());
  CHECK(back.pieces() == m.pieces());
  CHECK(back.byte_fallback());
}

TEST_CASE("unigram training") {
  SUBCASE("repeated string yields the whole-string piece") {
    const std::vector<std::string> corpus(30, "가나다");
    UnigramTrainerConfig cfg;
    cfg.target_vocab = kNumSpecials + 3 + 1;
    const auto m = train_unigram(corpus, cfg);
    CHECK(m.size() == cfg.target_vocab);
    REQUIRE(m.id_of("가나다"));
    double best_multi = -1e300;
    std::string best_text;
    for (const auto& p : m.pieces()) {
      if (p.type == PieceType::kNormal && utf8::length(p.text) > 1 && p.score > best_multi) {
        best_multi = p.score;
        best_text = p.text;
      }
    }
    CHECK(best_text == "가나다");
  }
  SUBCASE("target at coverage floor gives specials plus characters") {
    const std::vector<std::string> corpus = {"abc abd", "bca"};
    UnigramTrainerConfig cfg;
    cfg.target_vocab = coverage_floor(corpus, false);
    CHECK(cfg.target_vocab == kNumSpecials + 5);
    const auto m = train_unigram(corpus, cfg);
    CHECK(m.size() == cfg.target_vocab);
    for (const auto& p : m.pieces())
      if (p.type == PieceType::kNormal) CHECK(utf8::length(p.text) == 1);
  }
  SUBCASE("below coverage floor throws") {
    const std::vector<std::string> corpus = {"abc"};
    UnigramTrainerConfig cfg;
    cfg.target_vocab = 5;
    CHECK_THROWS_AS(train_unigram(corpus, cfg), ConfigError);
  }
  SUBCASE("deterministic") {
    std::vector<std::string> corpus;
    Rng rng(3);
    const std::vector<std::string> words = {"the", "cat", "sat", "on", "mat", "고양이", "가", "앉았다"};
    for (int d = 0; d < 40; ++d) {
      std::string doc;
      for (int w = 0; w < 12; ++w) doc += (w ? " " : "") + words[rng.uniform_int(words.size())];
      corpus.push_back(doc);
    }
    UnigramTrainerConfig cfg;
    cfg.target_vocab = 40;
    const auto a = train_unigram(corpus, cfg);
    const auto b = train_unigram(corpus, cfg);
    CHECK(a.serialize() == b.serialize());
    for (const auto& doc : corpus) CHECK(a.decode(a.encode(doc)) == doc);
  }
}

TEST_CASE("expected counts sum to the segment count times tokens per path") {
  // Single piece lattice: every segment uses exactly one piece per char.
  const auto m = chars_model({"a", "b"});
  const auto segs = count_segments(std::vector<std::string>{"ab", "ab"});
  const auto counts = expected_piece_counts(m, segs);
  CHECK(counts[*m.id_of("a")] == doctest::Approx(2.0));
  CHECK(counts[*m.id_of("b")] == doctest::Approx(2.0));
}

TEST_CASE("refine_pieces") {
  const auto m = SubwordModel::with_specials({{"a", -1}, {"b", -1}, {"ab", -0.5}, {"ba", -3}, {"bab", -1.2}}, false);
  SUBCASE("empty rules leave the model unchanged") {
    const auto r = refine_pieces(m, {}, std::vector<std::string>{});
    CHECK(r.model.pieces() == m.pieces());
  }
  SUBCASE("deny list removes only that piece") {
    PieceFilterRules rules;
    rules.manual_deny = {"ba", "a"};
    const auto r = refine_pieces(m, rules, std::vector<std::string>{});
    CHECK_FALSE(r.model.id_of("ba"));
    CHECK(r.model.id_of("a"));  // coverage pieces survive
    CHECK(r.model.size() == m.size() - 1);
    CHECK(*r.model.id_of("ab") < *r.model.id_of("bab"));
  }
  SUBCASE("min frequency under tokenization") {
    // "abab" -> ab ab; "bab" -> bab (beats b+ab); ba never wins.
    const std::vector<std::string> corpus = {"abab", "bab"};
    std::size_t ab = 0, bab = 0;
    for (const auto& d : corpus)
      for (int id : m.encode(d)) {
        ab += m.piece(id).text == "ab";
        bab += m.piece(id).text == "bab";
      }
    REQUIRE(ab == 2);
    PieceFilterRules rules;
    rules.min_corpus_freq = 2;
    const auto r = refine_pieces(m, rules, corpus);
    CHECK(r.model.id_of("ab"));
    CHECK_FALSE(r.model.id_of("ba"));
    REQUIRE(bab == 1);
    CHECK_FALSE(r.model.id_of("bab"));
    CHECK(r.report.removed_by_frequency.size() == 2);
  }
  SUBCASE("range and length filters") {
    const auto k = SubwordModel::with_specials({{"가", -1}, {"a", -1}, {"가a", -2}, {"가가가", -2}}, false);
    PieceFilterRules rules;
    rules.allowed_ranges = {{0xAC00, 0xD7A3}};
    const auto r = refine_pieces(k, rules, std::vector<std::string>{});
    CHECK_FALSE(r.model.id_of("가a"));
    CHECK(r.model.id_of("a"));
    rules.max_piece_len = 2;
    CHECK_FALSE(refine_pieces(k, rules, std::vector<std::string>{}).model.id_of("가가가"));
  }
  SUBCASE("manual add goes to the tail; collisions are reported") {
    PieceFilterRules rules;
    rules.manual_add = {{"abba"}, {"ab"}};
    const auto r = refine_pieces(m, rules, std::vector<std::string>{});
    REQUIRE(r.model.id_of("abba"));
    CHECK(*r.model.id_of("abba") == static_cast<int>(m.size()));
    CHECK(r.model.piece(*r.model.id_of("abba")).score == -4.0);
    CHECK(r.report.add_collisions == std::vector<std::string>{"ab"});
  }
  SUBCASE("overlapping ranges are a config error") {
    PieceFilterRules rules;
    rules.allowed_ranges = {{10, 20}, {15, 30}};
    CHECK_THROWS_AS(validate_rules(rules), ConfigError);
  }
}

TEST_CASE("merge") {
  const auto base = SubwordModel::with_specials({{"a", -1}, {"b", -2}, {"ab", -3}}, true);
  SUBCASE("self merge") {
    const auto r = merge(base, base);
    CHECK(r.model.pieces() == base.pieces());
    CHECK(r.overlap == base.size());
  }
  SUBCASE("ids preserved and new pieces appended in order with rescaled scores") {
    const auto added = SubwordModel::with_specials({{"가", -10}, {"나", -20}, {"a", -5}, {"다", -30}}, false);
    const auto r = merge(base, added);
    CHECK(r.overlap == kNumSpecials + 1);
    for (int id = 0; id < static_cast<int>(base.size()); ++id) CHECK(r.model.piece(id) == base.piece(id));
    REQUIRE(r.model.size() == base.size() + 3);
    const auto& p0 = r.model.piece(static_cast<int>(base.size()));
    const auto& p2 = r.model.piece(static_cast<int>(base.size()) + 2);
    CHECK(p0.text == "가");
    // added normal range [-30, -5] maps onto base range [-3, -1]
    CHECK(p0.score == doctest::Approx(-3.0 + 20.0 * 2.0 / 25.0));
    CHECK(p2.score == doctest::Approx(-3.0));
    CHECK(r.model.piece(static_cast<int>(base.size()) + 1).score == doctest::Approx(-3.0 + 10.0 * 2.0 / 25.0));
  }
}

TEST_CASE("complexity ratios") {
  const auto base = chars_model({"가", "나", "다"});
  const auto merged = merge(base, SubwordModel::with_specials({{"가나다", -1}}, false)).model;
  const std::vector<std::string> corpus(7, "가나다");
  SUBCASE("identity") {
    const auto r = complexity_ratios(base, base, corpus, 16);
    CHECK(r.ric == 1.0);
    CHECK(r.rec == 1.0);
  }
  SUBCASE("whole-word piece gives one third") {
    const auto r = complexity_ratios(merged, base, corpus, 16);
    CHECK(r.ric == doctest::Approx(1.0 / 3.0));
    CHECK(r.rec == doctest::Approx(8.0 / 7.0));
    const auto tr = token_ratio(merged, base, {{"ko", corpus}, {"same", {"가"}}});
    CHECK(tr.per_dataset[0].second == doctest::Approx(1.0 / 3.0));
    CHECK(tr.average_tr == doctest::Approx((1.0 / 3.0 + 1.0) / 2.0));
  }
  SUBCASE("rec is the vocab ratio") {
    std::vector<std::pair<std::string, double>> a, b;
    for (int i = 0; i < 48000 - kNumSpecials; ++i) a.emplace_back("p" + std::to_string(i), -1);
    for (int i = 0; i < 32000 - kNumSpecials; ++i) b.emplace_back("p" + std::to_string(i), -1);
    const auto r = complexity_ratios(SubwordModel::with_specials(a, false), SubwordModel::with_specials(b, false),
                                     std::vector<std::string>{"p1"}, 4096);
    CHECK(r.rec == 1.5);
  }
  SUBCASE("zero base tokens") {
    CHECK_THROWS_AS(complexity_ratios(base, base, std::vector<std::string>{""}, 8), DataError);
  }
}

TEST_CASE("token histogram") {
  const auto m = chars_model({"a"});
  const auto h = token_histogram(m, std::vector<std::string>{"aa"});
  CHECK(h[*m.id_of("a")] == 2);
  const auto empty = token_histogram(m, std::vector<std::string>{});
  CHECK(std::all_of(empty.begin(), empty.end(), [](auto c) { return c == 0; }));
}

TEST_CASE("nested vocab sweep is monotone") {
  std::vector<std::string> corpus;
  Rng rng(9);
  const std::vector<std::string> words = {"하늘", "바다", "사람", "학교", "공부", "했습니다", "있습니다", "그리고"};
  for (int d = 0; d < 60; ++d) {
    std::string doc;
    for (int w = 0; w < 10; ++w) doc += (w ? " " : "") + words[rng.uniform_int(words.size())];
    corpus.push_back(doc);
  }
  const auto base = chars_model({"a", "b", " "}, true);
  SweepConfig cfg;
  cfg.sizes = {30, 30, 40, 50, 60};
  cfg.embed_dim = 8;
  const auto res = vocab_sweep(corpus, base, cfg);
  REQUIRE(res.rows.size() == 5);
  CHECK(res.rows[0].merged.ric == res.rows[1].merged.ric);
  for (std::size_t i = 2; i < res.rows.size(); ++i) {
    CHECK(res.rows[i].merged.ric <= res.rows[i - 1].merged.ric);
    CHECK(res.rows[i].merged.rec > res.rows[i - 1].merged.rec);
  }
  CHECK(res.rows.back().merged.ric < 1.0);
}

TEST_CASE("knee rule") {
  std::vector<SweepRow> rows = {{1000, {0, 1.0, 1}}, {2000, {0, 0.8, 1}}, {3000, {0, 0.7, 1}}, {4000, {0, 0.69, 1}},
                                {5000, {0, 0.685, 1}}};
  // marginals per 1000: 0.2, 0.1, 0.01, 0.005 -> first below 0.02 is row 3
  CHECK(knee_index(rows) == 3);
}
