// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "langadapt/common/error.hpp"
#include "langadapt/common/hash.hpp"
#include "langadapt/common/utf8.hpp"
#include "langadapt/corpus/dedup.hpp"
#include "langadapt/corpus/ingest.hpp"
#include "langadapt/corpus/ngram_lm.hpp"
#include "langadapt/corpus/ppl_filter.hpp"
#include "langadapt/corpus/rules.hpp"
#include "langadapt/corpus/select.hpp"
#include "langadapt/corpus/stats.hpp"

using namespace langadapt;
using namespace langadapt::corpus;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  TempDir() : path(fs::temp_directory_path() / ("langadapt_test_" + std::to_string(std::random_device{}()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path path;
};

Corpus corpus_of(const std::vector<std::string>& texts) {
  Corpus c;
  for (const auto& t : texts) c.push_back(make_document(c.size(), t, "test"));
  return c;
}

std::vector<std::string> ids(const Corpus& c) {
  std::vector<std::string> out;
  for (const auto& d : c) out.push_back(d.id);
  return out;
}

// Shingle sets as strings, independent of the library's hashing.
std::set<std::u32string> shingle_strings(const std::string& text, std::size_t n) {
  const auto cps = utf8::decode(text);
  std::set<std::u32string> out;
  for (std::size_t i = 0; i + n <= cps.size(); ++i) out.insert(cps.substr(i, n));
  return out;
}

double jaccard(const std::set<std::u32string>& a, const std::set<std::u32string>& b) {
  std::size_t inter = 0;
  for (const auto& s : a) inter += b.count(s);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

Rule rule(std::string name, double value = 0.0, std::string script = "Hangul") {
  Rule r;
  r.name = std::move(name);
  r.value = value;
  r.script = std::move(script);
  return r;
}

std::string random_letters(std::mt19937_64& gen, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(static_cast<char>('a' + gen() % 26));
  return s;
}

}  // namespace

TEST_CASE("document ids and store round trip") {
  const auto d = make_document(7, "hello", "src");
  CHECK(d.id == "00000007-" + sha256_hex("hello").substr(0, 12));
  CHECK(d.byte_len == 5);
  TempDir tmp;
  const Corpus c = corpus_of({"one", "두 번째", "three"});
  save_corpus(tmp.path / "c.jsonl", c);
  CHECK(load_corpus(tmp.path / "c.jsonl") == c);
}

TEST_CASE("ingest") {
  TempDir tmp;
  write_file(tmp.path / "a.txt", "first doc  \n\n");
  write_file(tmp.path / "b.txt", "second");
  write_file(tmp.path / "c.txt", "e\xCC\x81");  // e + combining acute -> U+00E9 under NFC

  SUBCASE("plain files, one document each, normalized") {
    const std::vector<fs::path> paths = {tmp.path / "a.txt", tmp.path / "b.txt", tmp.path / "c.txt"};
    const auto res = ingest(paths, IngestFormat::kPlainText);
    REQUIRE(res.corpus.size() == 3);
    CHECK(std::set<std::string>{res.corpus[0].id, res.corpus[1].id, res.corpus[2].id}.size() == 3);
    CHECK(res.corpus[0].text == "first doc");
    CHECK(res.corpus[2].text == "\xC3\xA9");
    CHECK(res.corpus[0].source == "a");
    const auto again = ingest(paths, IngestFormat::kPlainText);
    CHECK(again.corpus == res.corpus);
  }

  SUBCASE("records: missing text, invalid UTF-8, empty") {
    write_file(tmp.path / "r.jsonl",
               "{\"text\": \"ok\", \"source\": \"web\"}\n"
               "{\"body\": \"no text\"}\n"
               "{\"text\": \"bad \xFF byte\"}\n"
               "{\"text\": \"   \"}\n"
               "not json\n");
    const auto res = ingest({tmp.path / "r.jsonl"}, IngestFormat::kJsonl);
    CHECK(res.corpus.size() == 1);
    CHECK(res.corpus[0].source == "web");
    CHECK(res.report.missing_text == 1);
    CHECK(res.report.invalid_utf8 == 1);
    CHECK(res.report.empty == 1);
    CHECK(res.report.malformed == 1);
    CHECK(res.report.records == 5);
  }

  CHECK_THROWS_AS(ingest({tmp.path / "missing.txt"}, IngestFormat::kPlainText), IoError);
}

TEST_CASE("random_select") {
  const Corpus c = corpus_of({"a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7", "a8", "a9"});
  CHECK(random_select(c, 1.0, 3) == c);
  CHECK_THROWS_AS(random_select(c, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(random_select(c, 1.5, 1), ConfigError);
  CHECK(random_select(c, 0.3, 1).size() == 3);
  CHECK(random_select(c, 0.31, 1).size() == 4);

  // Hand enumeration of the draws: sorted ids, mt19937_64(7), bounded
  // integers by rejection above the largest multiple of the bound.
  std::vector<std::string> sorted = ids(c);
  std::sort(sorted.begin(), sorted.end());
  std::mt19937_64 gen(7);
  for (std::uint64_t i = sorted.size(); i > 1; --i) {
    const std::uint64_t max = ~std::uint64_t{0};
    const std::uint64_t limit = max - (max % i + 1) % i;
    std::uint64_t x = gen();
    while (x > limit) x = gen();
    std::swap(sorted[i - 1], sorted[x % i]);
  }
  std::set<std::string> expect(sorted.begin(), sorted.begin() + 5);
  const auto picked = random_select(c, 0.5, 7);
  REQUIRE(picked.size() == 5);
  const auto picked_ids = ids(picked);
  CHECK(std::set<std::string>(picked_ids.begin(), picked_ids.end()) == expect);
  CHECK(std::is_sorted(picked_ids.begin(), picked_ids.end()));  // input order kept

  CHECK(random_select(c, 0.5, 8).size() == 5);
  CHECK(random_select(c, 0.5, 7) == picked);
}

TEST_CASE("rule_filter") {
  const Corpus c = corpus_of({"short", "한국어 문장입니다", "abcdefghi 가", "ㅋㅋㅋㅋㅋㅋㅋㅋ 좋아요", "Click here to subscribe"});
  CHECK(rule_filter(c, {}).corpus == c);

  const auto by_len = rule_filter(c, {rule("min_len", 10)});
  CHECK(by_len.report.rejections.front() == std::pair<std::string, std::string>{c[0].id, "min_len"});

  // 9 Latin letters and 1 Hangul letter.
  CHECK(foreign_ratio("abcdefghi 가", "Hangul") == doctest::Approx(0.9));
  CHECK(foreign_ratio("12 !!", "Hangul") == 0.0);
  const Rule foreign = rule("max_foreign_ratio", 0.5);
  const auto by_script = rule_filter(c, {foreign});
  const auto kept = ids(by_script.corpus);
  CHECK(std::count(kept.begin(), kept.end(), c[2].id) == 0);

  CHECK(longest_char_run("ㅋㅋㅋㅋㅋㅋㅋㅋ 좋아요") == 8);
  const Rule run = rule("max_char_run", 4);
  Rule boiler = rule("boilerplate");
  boiler.patterns = {"^Click here"};
  const auto all = rule_filter(c, {rule("min_len", 10), foreign, run, boiler});
  CHECK(ids(all.corpus) == std::vector<std::string>{c[1].id});
  REQUIRE(all.report.rejected.size() == 4);
  CHECK(all.report.rejected[0].second == 1);
  CHECK(all.report.rejected[1].second == 2);  // the Latin doc and the boilerplate line
  CHECK(all.report.rejected[2].second == 1);
  CHECK(all.report.rejected[3].second == 0);  // already counted against max_foreign_ratio

  CHECK_THROWS_AS(rule_filter(c, {rule("no_such_rule", 1)}), ConfigError);
  const Rule bad_script = rule("max_foreign_ratio", 0.5, "Klingon");
  CHECK_THROWS_AS(rule_filter(c, {bad_script}), ConfigError);
}

TEST_CASE("dedup") {
  std::mt19937_64 gen(5);
  const std::string base = random_letters(gen, 1000);
  std::string one_off = base;
  one_off[500] = one_off[500] == 'z' ? 'y' : 'z';
  const std::string other = random_letters(gen, 1000);

  // Exact Jaccard over 5-gram shingles: a one-character edit touches at most
  // 5 shingles of each document.
  const double j = jaccard(shingle_strings(base, 5), shingle_strings(one_off, 5));
  CHECK(j >= 0.98);
  CHECK(exact_jaccard(shingles(base, 5), shingles(one_off, 5)) == doctest::Approx(j));

  const Corpus c = corpus_of({base, other, base, one_off, "tiny"});
  const auto res = dedup(c, {});
  CHECK(ids(res.corpus) == std::vector<std::string>{c[0].id, c[1].id, c[4].id});
  REQUIRE(res.report.clusters.size() == 1);
  CHECK(res.report.clusters[0].kept == c[0].id);
  CHECK(res.report.clusters[0].members == std::vector<std::string>{c[0].id, c[2].id, c[3].id});
  CHECK(res.report.clusters[0].similarity[1] == 1.0);
  CHECK(res.report.too_short == std::vector<std::string>{c[4].id});
  CHECK(res.report.removed == 2);

  // Idempotent and deterministic.
  CHECK(dedup(res.corpus, {}).corpus == res.corpus);
  CHECK(ids(dedup(c, {}).corpus) == ids(res.corpus));

  DedupConfig bad;
  bad.bands = 7;
  CHECK_THROWS_AS(dedup(c, bad), ConfigError);
  CHECK_THROWS_AS(dedup(Corpus{}, {}), DataError);
}

TEST_CASE("n-gram LM") {
  const std::vector<std::string> abab = {"abab"};
  const auto uni = NgramLM::train(abab, 1, 1e-12);
  CHECK(uni.vocab_size() == 3);
  CHECK(uni.prob(U"", U'a') == doctest::Approx(0.5));
  CHECK(uni.prob(U"", U'b') == doctest::Approx(0.5));

  const auto smooth = NgramLM::train(abab, 1, 0.5);
  CHECK(smooth.prob(U"", U'z') == doctest::Approx(0.5 / (4 + 0.5 * 3)));
  CHECK(smooth.prob(U"", U'z') == smooth.prob(U"", U'q'));

  const auto tri = NgramLM::train(abab, 3, 1.0);
  CHECK(NgramLM::train(abab, 3, 1.0) == tri);
  CHECK(NgramLM::from_json(tri.to_json()) == tri);
  // Proper distribution for any context: seen units plus the unseen class.
  for (const std::u32string ctx : {U"", U"a", U"ab", U"zz", U"ba"}) {
    CHECK(tri.prob(ctx, U'a') + tri.prob(ctx, U'b') + tri.prob(ctx, U'?') == doctest::Approx(1.0).epsilon(1e-12));
  }

  // Hand-derived: P(a|^^) = 19/28, P(b|^a) = 26/35.
  const auto score = perplexity(tri, make_document(0, "ab", "t"));
  CHECK(score.unit_count == 2);
  CHECK(score.ppl == doctest::Approx(std::exp(-(std::log(19.0 / 28) + std::log(26.0 / 35)) / 2)).epsilon(1e-12));

  CHECK_THROWS_AS(NgramLM::train(abab, 0, 1.0), ConfigError);
  CHECK_THROWS_AS(NgramLM::train(abab, 2, 0.0), ConfigError);
}

TEST_CASE("perplexity of a uniform model is V") {
  for (const std::size_t v : {1u, 7u, 1000u}) {
    const auto lm = NgramLM::uniform(v);
    const auto s = perplexity(lm, make_document(0, "any text at all, 한국어 포함", "t"));
    CHECK(std::abs(s.ppl - static_cast<double>(v)) <= 1e-9 * static_cast<double>(v));
  }
  // Probability 1 at every position.
  const auto lm = NgramLM::uniform(1);
  CHECK(perplexity(lm, make_document(0, "aaa", "t")).ppl == 1.0);
}

TEST_CASE("ppl_filter") {
  // Order-1 model on "aaaaaaaa": P(a) = 9/10 and P(unseen) = 1/10 with k = 1, V = 2.
  const auto lm = NgramLM::train(std::vector<std::string>{"aaaaaaaa"}, 1, 1.0);
  const Corpus c = corpus_of({"aaaa", "ab", "bbbb", "aab"});
  const double pa = 0.9, pb = 0.1;
  const std::vector<double> want = {1 / pa, 1 / std::sqrt(pa * pb), 1 / pb, std::pow(pa * pa * pb, -1.0 / 3)};
  const auto abs = ppl_filter(c, lm, PplMode::kAbsolute, 5.0);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(abs.report.scores[i].ppl == doctest::Approx(want[i]));
  CHECK(ids(abs.corpus) == std::vector<std::string>{c[0].id, c[1].id, c[3].id});

  const auto half = ppl_filter(c, lm, PplMode::kPercentile, 50.0);
  CHECK(ids(half.corpus) == std::vector<std::string>{c[0].id, c[3].id});
  CHECK(*half.report.cutoff == doctest::Approx(want[3]));
  CHECK(ppl_filter(c, lm, PplMode::kPercentile, 100.0).corpus == c);

  // Equal scores are ranked by id.
  const Corpus tied = corpus_of({"ab", "ba", "aaaa"});
  const auto one = ppl_filter(tied, lm, PplMode::kPercentile, 60.0);
  CHECK(ids(one.corpus) == std::vector<std::string>{tied[0].id, tied[2].id});

  const auto empty = ppl_filter(Corpus{}, lm, PplMode::kPercentile, 50.0);
  CHECK(empty.corpus.empty());
  CHECK(empty.report.warnings.size() == 1);
  CHECK_THROWS_AS(ppl_filter(c, lm, PplMode::kPercentile, 0.0), ConfigError);
  CHECK_THROWS_AS(ppl_filter(c, lm, PplMode::kAbsolute, -1.0), ConfigError);
}

TEST_CASE("corpus_stats") {
  const auto zero = corpus_stats(Corpus{});
  CHECK(zero.documents == 0);
  CHECK(zero.bytes == 0);
  CHECK(zero.tokens == 0);
  CHECK(packed_samples(9000, 4096) == 2);

  const auto tok = tokenizer::SubwordModel::with_specials({{"x", -1.0}}, false);
  const Corpus c = corpus_of({std::string(3000, 'x'), std::string(4000, 'x'), std::string(2000, 'x')});
  const auto s = corpus_stats(c, &tok, 4096);
  CHECK(s.documents == 3);
  CHECK(s.bytes == 9000);
  CHECK(s.tokens == 9000);
  CHECK(s.samples == 2);
}
