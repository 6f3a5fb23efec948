// SPDX-License-Identifier: Apache-2.0
#include "langadapt/tokenizer/unigram_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "langadapt/common/error.hpp"
#include "langadapt/common/utf8.hpp"

namespace langadapt::tokenizer {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Floor on expected counts in the M-step so unused pieces keep a finite score.
constexpr double kMinExpectedCount = 1e-6;

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Working vocabulary of normal pieces.
struct Vocab {
  std::vector<std::string> texts;
  std::vector<double> scores;
  std::vector<bool> required;
  std::unordered_map<std::string, int> index;
  std::size_t max_len = 1;

  void reindex() {
    index.clear();
    max_len = 1;
    for (int i = 0; i < static_cast<int>(texts.size()); ++i) {
      index.emplace(texts[i], i);
      max_len = std::max(max_len, utf8::length(texts[i]));
    }
  }

  // Visits every (start, end, piece) edge of the segment lattice.
  template <typename Fn>
  void for_each_edge(std::string_view seg, const std::vector<std::size_t>& bounds, Fn&& fn) const {
    const std::size_t n = bounds.size() - 1;
    std::string key;
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t limit = std::min(n, s + max_len);
      for (std::size_t e = s + 1; e <= limit; ++e) {
        key.assign(seg.data() + bounds[s], bounds[e] - bounds[s]);
        const auto it = index.find(key);
        if (it != index.end()) fn(s, e, it->second);
      }
    }
  }
};

void accumulate_expected(const Vocab& vocab, std::string_view seg, double weight, std::vector<double>& counts) {
  const auto bounds = utf8::boundaries(seg);
  const std::size_t n = bounds.size() - 1;
  struct Edge {
    std::size_t s, e;
    int id;
  };
  std::vector<Edge> edges;
  vocab.for_each_edge(seg, bounds, [&](std::size_t s, std::size_t e, int id) { edges.push_back({s, e, id}); });

  // edges are ordered by start; forward needs them by end
  std::vector<double> alpha(n + 1, kNegInf), beta(n + 1, kNegInf);
  alpha[0] = 0.0;
  std::vector<std::size_t> by_end(edges.size());
  std::iota(by_end.begin(), by_end.end(), 0);
  std::stable_sort(by_end.begin(), by_end.end(), [&](std::size_t a, std::size_t b) { return edges[a].e < edges[b].e; });
  for (std::size_t k : by_end) {
    const Edge& ed = edges[k];
    alpha[ed.e] = log_add(alpha[ed.e], alpha[ed.s] + vocab.scores[ed.id]);
  }
  beta[n] = 0.0;
  for (auto it = edges.rbegin(); it != edges.rend(); ++it) {
    beta[it->s] = log_add(beta[it->s], vocab.scores[it->id] + beta[it->e]);
  }
  const double z = alpha[n];
  if (z == kNegInf) return;
  for (const Edge& ed : edges) {
    const double lp = alpha[ed.s] + vocab.scores[ed.id] + beta[ed.e] - z;
    if (lp > -700.0) counts[ed.id] += weight * std::exp(lp);
  }
}

// Best segmentation as vocab indices; `excluded` is never used.
std::vector<int> viterbi(const Vocab& vocab, std::string_view seg, int excluded = -1) {
  const auto bounds = utf8::boundaries(seg);
  const std::size_t n = bounds.size() - 1;
  std::vector<double> best(n + 1, kNegInf);
  std::vector<std::size_t> back_start(n + 1, 0);
  std::vector<int> back_id(n + 1, -1);
  best[0] = 0.0;
  vocab.for_each_edge(seg, bounds, [&](std::size_t s, std::size_t e, int id) {
    if (id == excluded || best[s] == kNegInf) return;
    const double cand = best[s] + vocab.scores[id];
    if (cand > best[e]) {
      best[e] = cand;
      back_start[e] = s;
      back_id[e] = id;
    }
  });
  if (best[n] == kNegInf) return {};
  std::vector<int> path;
  for (std::size_t e = n; e > 0; e = back_start[e]) path.push_back(back_id[e]);
  std::reverse(path.begin(), path.end());
  return path;
}

void em_round(Vocab& vocab, const SegmentCounts& segments) {
  std::vector<double> counts(vocab.texts.size(), 0.0);
  for (const auto& [seg, freq] : segments) accumulate_expected(vocab, seg, static_cast<double>(freq), counts);
  double total = 0.0;
  for (double& c : counts) {
    c = std::max(c, kMinExpectedCount);
    total += c;
  }
  const double log_total = std::log(total);
  for (std::size_t i = 0; i < counts.size(); ++i) vocab.scores[i] = std::log(counts[i]) - log_total;
}

void prune(Vocab& vocab, const SegmentCounts& segments, std::size_t keep_normal) {
  const std::size_t m = vocab.texts.size();
  std::vector<double> freq(m, 0.0);
  std::vector<double> seg_presence(m, 0.0);
  double seg_total = 0.0;
  std::vector<int> seen_in_seg(m, -1);
  int seg_no = 0;
  for (const auto& [seg, count] : segments) {
    const double w = static_cast<double>(count);
    seg_total += w;
    for (int id : viterbi(vocab, seg)) {
      freq[id] += w;
      if (seen_in_seg[id] != seg_no) {
        seen_in_seg[id] = seg_no;
        seg_presence[id] += w;
      }
    }
    ++seg_no;
  }
  const double sum = std::accumulate(freq.begin(), freq.end(), 0.0);

  std::vector<double> loss(m, kNegInf);
  for (std::size_t i = 0; i < m; ++i) {
    if (vocab.required[i] || freq[i] <= 0.0) continue;
    const auto alt = viterbi(vocab, vocab.texts[i], static_cast<int>(i));
    const double logprob_piece = std::log(freq[i]) - std::log(sum);
    const double logsum_alt = std::log(sum + freq[i] * (static_cast<double>(alt.size()) - 1.0));
    double logprob_alt = 0.0;
    for (int a : alt) logprob_alt += std::log(freq[a] + freq[i]) - logsum_alt;
    loss[i] = (seg_presence[i] / seg_total) * (logprob_piece - logprob_alt);
  }

  std::vector<int> optional;
  for (std::size_t i = 0; i < m; ++i)
    if (!vocab.required[i]) optional.push_back(static_cast<int>(i));
  std::sort(optional.begin(), optional.end(), [&](int a, int b) {
    if (loss[a] != loss[b]) return loss[a] > loss[b];
    if (vocab.scores[a] != vocab.scores[b]) return vocab.scores[a] > vocab.scores[b];
    return vocab.texts[a] < vocab.texts[b];
  });
  std::size_t required = m - optional.size();
  std::size_t keep_optional = keep_normal > required ? keep_normal - required : 0;
  std::vector<bool> keep(m, false);
  for (std::size_t i = 0; i < m; ++i) keep[i] = vocab.required[i];
  for (std::size_t k = 0; k < std::min(keep_optional, optional.size()); ++k) keep[optional[k]] = true;

  Vocab next;
  for (std::size_t i = 0; i < m; ++i) {
    if (!keep[i]) continue;
    next.texts.push_back(std::move(vocab.texts[i]));
    next.scores.push_back(vocab.scores[i]);
    next.required.push_back(vocab.required[i]);
  }
  next.reindex();
  vocab = std::move(next);
}

std::size_t head_size(bool byte_fallback) { return kNumSpecials + (byte_fallback ? 256 : 0); }

}  // namespace

SegmentCounts count_segments(std::span<const std::string> texts) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& text : texts) {
    const auto bounds = utf8::boundaries(text);
    const std::u32string cps = utf8::decode(text);
    std::size_t start = 0;
    for (std::size_t i = 1; i <= cps.size(); ++i) {
      if (i == cps.size() || utf8::is_whitespace(cps[i])) {
        if (i > start) ++counts[text.substr(bounds[start], bounds[i] - bounds[start])];
        start = i;
      }
    }
  }
  return SegmentCounts(counts.begin(), counts.end());
}

std::size_t coverage_floor(std::span<const std::string> texts, bool byte_fallback) {
  std::set<char32_t> chars;
  for (const auto& t : texts)
    for (char32_t cp : utf8::decode(t)) chars.insert(cp);
  return head_size(byte_fallback) + chars.size();
}

std::vector<double> expected_piece_counts(const SubwordModel& model, const SegmentCounts& segments) {
  Vocab vocab;
  std::vector<int> ids;
  for (int id = 0; id < static_cast<int>(model.size()); ++id) {
    const Piece& p = model.piece(id);
    if (p.type != PieceType::kNormal) continue;
    vocab.texts.push_back(p.text);
    vocab.scores.push_back(p.score);
    vocab.required.push_back(false);
    ids.push_back(id);
  }
  vocab.reindex();
  std::vector<double> local(vocab.texts.size(), 0.0);
  for (const auto& [seg, freq] : segments) accumulate_expected(vocab, seg, static_cast<double>(freq), local);
  std::vector<double> out(model.size(), 0.0);
  for (std::size_t i = 0; i < ids.size(); ++i) out[ids[i]] = local[i];
  return out;
}

SubwordModel train_unigram(std::span<const std::string> texts, const UnigramTrainerConfig& config) {
  if (config.seed_vocab_multiplier < 1.0) throw ConfigError("seed_vocab_multiplier", "must be >= 1");
  if (!(config.prune_fraction > 0.0 && config.prune_fraction < 1.0)) {
    throw ConfigError("prune_fraction", "must be in (0, 1)");
  }
  if (config.max_piece_len < 1) throw ConfigError("max_piece_len", "must be >= 1");
  if (config.em_iterations < 1) throw ConfigError("em_iterations", "must be >= 1");

  const SegmentCounts segments = count_segments(texts);
  const std::size_t head = head_size(config.byte_fallback);

  std::map<std::string, double> char_freq;
  std::unordered_map<std::string, double> substr_freq;
  for (const auto& [seg, count] : segments) {
    const auto bounds = utf8::boundaries(seg);
    const std::size_t n = bounds.size() - 1;
    const double w = static_cast<double>(count);
    for (std::size_t s = 0; s < n; ++s) {
      char_freq[seg.substr(bounds[s], bounds[s + 1] - bounds[s])] += w;
      for (std::size_t e = s + 2; e <= std::min(n, s + config.max_piece_len); ++e) {
        substr_freq[seg.substr(bounds[s], bounds[e] - bounds[s])] += w;
      }
    }
  }
  const std::size_t floor = head + char_freq.size();
  if (config.target_vocab < floor) {
    throw ConfigError("target_vocab", fmt::format("{} is below the coverage floor {}", config.target_vocab, floor));
  }

  struct Candidate {
    std::string text;
    double freq;
  };
  std::vector<Candidate> candidates;
  for (auto& [text, freq] : substr_freq)
    if (freq >= 2.0) candidates.push_back({text, freq});
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    const double sa = a.freq * static_cast<double>(utf8::length(a.text));
    const double sb = b.freq * static_cast<double>(utf8::length(b.text));
    if (sa != sb) return sa > sb;
    return a.text < b.text;
  });
  const auto seed_size = static_cast<std::size_t>(std::ceil(config.seed_vocab_multiplier * static_cast<double>(config.target_vocab)));
  const std::size_t seed_multi = seed_size > floor ? std::min(candidates.size(), seed_size - floor) : 0;
  if (floor + seed_multi < config.target_vocab) {
    throw ConfigError("target_vocab", fmt::format("{} exceeds what the corpus supports ({})", config.target_vocab,
                                                  floor + seed_multi));
  }

  Vocab vocab;
  double total = 0.0;
  for (const auto& [text, freq] : char_freq) {
    vocab.texts.push_back(text);
    vocab.scores.push_back(freq);
    vocab.required.push_back(true);
    total += freq;
  }
  for (std::size_t i = 0; i < seed_multi; ++i) {
    vocab.texts.push_back(candidates[i].text);
    vocab.scores.push_back(candidates[i].freq);
    vocab.required.push_back(false);
    total += candidates[i].freq;
  }
  for (double& s : vocab.scores) s = std::log(s) - std::log(total);
  vocab.reindex();

  const std::size_t target_normal = config.target_vocab - head;
  while (true) {
    for (int it = 0; it < config.em_iterations; ++it) em_round(vocab, segments);
    const std::size_t size = vocab.texts.size();
    if (size <= target_normal) break;
    std::size_t next = static_cast<std::size_t>(std::floor(static_cast<double>(size) * (1.0 - config.prune_fraction)));
    next = std::clamp(next, target_normal, size - 1);
    prune(vocab, segments, next);
  }

  std::vector<std::size_t> order(vocab.texts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (vocab.scores[a] != vocab.scores[b]) return vocab.scores[a] > vocab.scores[b];
    return vocab.texts[a] < vocab.texts[b];
  });
  std::vector<std::pair<std::string, double>> normal;
  normal.reserve(order.size());
  for (std::size_t i : order) normal.emplace_back(vocab.texts[i], vocab.scores[i]);
  return SubwordModel::with_specials(normal, config.byte_fallback);
}

SubwordModel prune_to_size(const SubwordModel& model, std::size_t size) {
  std::vector<int> multi;
  std::size_t fixed = 0;
  for (int id = 0; id < static_cast<int>(model.size()); ++id) {
    const Piece& p = model.piece(id);
    if (p.type == PieceType::kNormal && utf8::length(p.text) > 1) {
      multi.push_back(id);
    } else {
      ++fixed;
    }
  }
  if (size < fixed) throw ConfigError("size", fmt::format("{} is below the coverage floor {}", size, fixed));
  if (size > model.size()) throw ConfigError("size", fmt::format("{} exceeds the model size {}", size, model.size()));
  std::stable_sort(multi.begin(), multi.end(), [&](int a, int b) { return model.piece(a).score > model.piece(b).score; });
  std::vector<bool> keep(model.size(), true);
  for (std::size_t k = size - fixed; k < multi.size(); ++k) keep[multi[k]] = false;
  std::vector<Piece> pieces;
  pieces.reserve(size);
  for (int id = 0; id < static_cast<int>(model.size()); ++id)
    if (keep[id]) pieces.push_back(model.piece(id));
  return SubwordModel(std::move(pieces));
}

}  // namespace langadapt::tokenizer
