// SPDX-License-Identifier: Apache-2.0
#include "langadapt/orchestrator/synth.hpp"

#include <array>
#include <span>
#include <string_view>

#include "langadapt/common/utf8.hpp"

namespace langadapt::orchestrator {
namespace {

using Words = std::span<const std::string_view>;

constexpr std::array<std::string_view, 24> kEnNouns = {
    "cat", "dog", "teacher", "student", "city", "river", "book", "market", "friend", "garden", "house", "child",
    "bird", "train", "letter", "window", "doctor", "farmer", "table", "song", "road", "school", "ship", "tree"};
constexpr std::array<std::string_view, 14> kEnAdjs = {"small", "old",   "red",   "quiet", "happy", "green", "tall",
                                                      "cold",  "bright", "young", "busy", "warm",  "dark",  "new"};
constexpr std::array<std::string_view, 14> kEnVerbs = {"sees", "finds", "likes", "reads", "carries", "visits", "makes",
                                                       "opens", "paints", "follows", "buys", "hears", "cleans", "meets"};
constexpr std::array<std::string_view, 8> kEnPlaces = {"in the park", "near the river", "at home",  "in the city",
                                                       "by the road", "at school",      "on the ship", "in the garden"};
constexpr std::array<std::string_view, 6> kEnTimes = {"Today", "Yesterday", "In the morning", "At night", "Often",
                                                      "Sometimes"};

constexpr std::array<std::string_view, 28> kKoNouns = {
    "학교", "사람", "고양이", "책",   "하늘", "바다", "선생님", "친구", "음식", "도시", "강아지", "컴퓨터", "시장", "공원",
    "나무", "꽃",   "물",     "밥",   "집",   "회사", "학생",   "아이", "편지", "노래", "기차",   "창문",   "의사", "농부"};
constexpr std::array<std::string_view, 12> kKoPlaces = {"학교", "시장", "공원", "도서관", "바다", "도시",
                                                        "회사", "집",   "식당", "병원",   "역",   "마을"};
constexpr std::array<std::string_view, 12> kKoTransitive = {"먹었습니다", "봤습니다", "좋아합니다", "만들었습니다",
                                                            "읽었습니다", "샀습니다", "기다렸습니다", "찾았습니다",
                                                            "그렸습니다", "들었습니다", "열었습니다", "닦았습니다"};
constexpr std::array<std::string_view, 8> kKoIntransitive = {"놀았습니다", "일했습니다", "쉬었습니다", "공부했습니다",
                                                             "잤습니다",   "웃었습니다", "노래했습니다", "걸었습니다"};
constexpr std::array<std::string_view, 8> kKoAdjs = {"좋습니다", "큽니다", "작습니다", "예쁩니다",
                                                     "조용합니다", "바쁩니다", "따뜻합니다", "춥습니다"};
constexpr std::array<std::string_view, 8> kKoAdverbs = {"오늘", "어제", "아침에", "저녁에", "정말", "천천히", "함께", "자주"};

// Zipf-like pick: index i has weight 1 / (i + 1).
std::string_view pick(Rng& rng, Words words) {
  double total = 0.0;
  for (std::size_t i = 0; i < words.size(); ++i) total += 1.0 / static_cast<double>(i + 1);
  double u = rng.uniform01() * total;
  for (std::size_t i = 0; i < words.size(); ++i) {
    u -= 1.0 / static_cast<double>(i + 1);
    if (u < 0.0) return words[i];
  }
  return words.back();
}

bool has_final_consonant(std::string_view word) {
  const auto cps = utf8::decode(word);
  const char32_t last = cps.back();
  return last >= 0xAC00 && last <= 0xD7A3 && (last - 0xAC00) % 28 != 0;
}

std::string particle(std::string_view noun, std::string_view with_final, std::string_view without_final) {
  return std::string(noun) + std::string(has_final_consonant(noun) ? with_final : without_final);
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

template <typename SentenceFn>
std::string document(Rng& rng, int sentences, SentenceFn fn) {
  std::string out;
  for (int i = 0; i < sentences; ++i) {
    if (i > 0) out += ' ';
    out += fn(rng);
  }
  return out;
}

}  // namespace

std::string english_sentence(Rng& rng) {
  std::string s;
  switch (rng.uniform_int(4)) {
    case 0:
      s = "the " + std::string(pick(rng, kEnAdjs)) + " " + std::string(pick(rng, kEnNouns)) + " " +
          std::string(pick(rng, kEnVerbs)) + " the " + std::string(pick(rng, kEnNouns));
      break;
    case 1:
      s = std::string(pick(rng, kEnTimes)) + " the " + std::string(pick(rng, kEnNouns)) + " " +
          std::string(pick(rng, kEnVerbs)) + " a " + std::string(pick(rng, kEnAdjs)) + " " +
          std::string(pick(rng, kEnNouns));
      break;
    case 2:
      s = "the " + std::string(pick(rng, kEnNouns)) + " is " + std::string(pick(rng, kEnAdjs)) + " " +
          std::string(pick(rng, kEnPlaces));
      break;
    default:
      s = "a " + std::string(pick(rng, kEnNouns)) + " " + std::string(pick(rng, kEnVerbs)) + " the " +
          std::string(pick(rng, kEnNouns)) + " " + std::string(pick(rng, kEnPlaces));
      break;
  }
  return capitalize(s) + ".";
}

std::string korean_sentence(Rng& rng) {
  std::string s;
  switch (rng.uniform_int(4)) {
    case 0:
      s = std::string(pick(rng, kKoAdverbs)) + " " + particle(pick(rng, kKoNouns), "은", "는") + " " +
          particle(pick(rng, kKoNouns), "을", "를") + " " + std::string(pick(rng, kKoTransitive));
      break;
    case 1:
      s = particle(pick(rng, kKoNouns), "이", "가") + " " + std::string(pick(rng, kKoPlaces)) + "에서 " +
          std::string(pick(rng, kKoIntransitive));
      break;
    case 2:
      s = particle(pick(rng, kKoNouns), "은", "는") + " " + std::string(pick(rng, kKoAdverbs)) + " " +
          std::string(pick(rng, kKoAdjs));
      break;
    default:
      s = particle(pick(rng, kKoNouns), "이", "가") + " " + std::string(pick(rng, kKoPlaces)) + "에 갔습니다";
      break;
  }
  return s + ".";
}

std::string english_document(Rng& rng, int sentences) { return document(rng, sentences, english_sentence); }
std::string korean_document(Rng& rng, int sentences) { return document(rng, sentences, korean_sentence); }

std::string mixed_document(Rng& rng, int sentences) {
  std::string out;
  for (int i = 0; i < sentences; ++i) {
    if (i > 0) out += ' ';
    out += i % 2 == 0 ? korean_sentence(rng) : english_sentence(rng);
  }
  return out;
}

std::vector<SynthDoc> synth_corpus(const SynthConfig& cfg) {
  Rng rng(cfg.seed);
  const auto sentences = [&] {
    const int span = std::max(1, cfg.max_sentences - cfg.min_sentences + 1);
    return cfg.min_sentences + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(span)));
  };
  std::vector<SynthDoc> docs;
  for (int i = 0; i < cfg.english_docs; ++i) docs.push_back({english_document(rng, sentences()), "en"});
  std::vector<std::size_t> korean;
  for (int i = 0; i < cfg.korean_docs; ++i) {
    korean.push_back(docs.size());
    docs.push_back({korean_document(rng, sentences()), "ko"});
  }
  for (int i = 0; i < cfg.mixed_docs; ++i) docs.push_back({mixed_document(rng, sentences()), "mixed"});

  // Near duplicates: swap one noun for another with the same final-consonant
  // class so the particles stay grammatical.
  for (int i = 0; i < cfg.near_duplicates && !korean.empty(); ++i) {
    std::string text = docs[korean[rng.uniform_int(korean.size())]].text;
    const auto from = kKoNouns[rng.uniform_int(kKoNouns.size())];
    const auto to = kKoNouns[rng.uniform_int(kKoNouns.size())];
    const auto pos = text.find(from);
    if (pos != std::string::npos && has_final_consonant(from) == has_final_consonant(to)) {
      text.replace(pos, from.size(), to);
    }
    docs.push_back({text, "dup"});
  }

  constexpr std::array<std::string_view, 4> kBoilerplate = {
      "Copyright 2024. All rights reserved.", "Click here to subscribe to our newsletter.",
      "로그인 후 이용해 주세요. Terms of service apply.", "Share this page on social media."};
  for (int i = 0; i < cfg.noise_docs; ++i) {
    std::string text;
    switch (i % 3) {
      case 0:
        text = std::string(kBoilerplate[rng.uniform_int(kBoilerplate.size())]);
        break;
      case 1:
        for (int k = 0; k < 40; ++k) text += "ㅋ";
        text = korean_sentence(rng) + " " + text;
        break;
      default:
        text = "네.";
        break;
    }
    docs.push_back({text, "noise"});
  }

  // Deterministic interleave so sources are not in blocks.
  for (std::size_t i = docs.size(); i > 1; --i) std::swap(docs[i - 1], docs[rng.uniform_int(i)]);
  return docs;
}

SynthBundle synth_bundle(const SynthConfig& cfg) {
  SynthBundle b;
  b.raw = synth_corpus(cfg);
  Rng base_rng(derive_seed(cfg.seed, 1));
  // Korean documents spread evenly through the English ones.
  const int en = cfg.base_english_docs, ko = cfg.base_korean_docs;
  int ko_done = 0;
  for (int i = 0; i < en; ++i) {
    b.base.push_back({english_document(base_rng, cfg.base_sentences), "en"});
    while (ko_done < ko && static_cast<std::int64_t>(ko_done) * en <= static_cast<std::int64_t>(i) * ko) {
      b.base.push_back({korean_document(base_rng, cfg.base_sentences), "ko"});
      ++ko_done;
    }
  }
  for (; ko_done < ko; ++ko_done) b.base.push_back({korean_document(base_rng, cfg.base_sentences), "ko"});
  Rng eval_rng(derive_seed(cfg.seed, 2));
  for (int i = 0; i < cfg.eval_docs; ++i) b.eval.push_back({mixed_document(eval_rng, cfg.eval_sentences), "mixed"});
  return b;
}

std::vector<Json> synth_records(const std::vector<SynthDoc>& docs) {
  std::vector<Json> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(Json{{"text", d.text}, {"source", d.source}});
  return out;
}

}  // namespace langadapt::orchestrator
