// SPDX-License-Identifier: Apache-2.0
#include "langadapt/corpus/ngram_lm.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "langadapt/common/error.hpp"
#include "langadapt/common/utf8.hpp"

namespace langadapt::corpus {

NgramLM NgramLM::train(std::span<const std::string> texts, int order, double k) {
  if (order < 1) throw ConfigError("order", "must be >= 1");
  if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError("smoothing_k", "must be positive");
  if (texts.empty()) throw DataError("perplexity LM: trusted corpus is empty");
  NgramLM lm;
  lm.order_ = order;
  lm.k_ = k;
  lm.counts_.resize(order);
  std::set<char32_t> units;
  for (const auto& text : texts) {
    std::u32string padded(order - 1, kBosUnit);
    padded += utf8::decode(text);
    for (std::size_t t = order - 1; t < padded.size(); ++t) {
      const char32_t u = padded[t];
      units.insert(u);
      for (int m = 1; m <= order; ++m) {
        auto& c = lm.counts_[m - 1][padded.substr(t - (m - 1), m - 1)];
        ++c.total;
        ++c.next[u];
      }
    }
  }
  lm.units_.assign(units.begin(), units.end());
  lm.vocab_size_ = lm.units_.size() + 1;
  return lm;
}

NgramLM NgramLM::uniform(std::size_t v) {
  if (v < 1) throw ConfigError("vocab_size", "must be >= 1");
  NgramLM lm;
  lm.order_ = 1;
  lm.k_ = 1.0;
  lm.vocab_size_ = v;
  lm.counts_.resize(1);
  return lm;
}

bool NgramLM::known(char32_t unit) const { return std::binary_search(units_.begin(), units_.end(), unit); }

double NgramLM::prob(std::u32string_view context, char32_t unit) const {
  const double kv = k_ * static_cast<double>(vocab_size_);
  // Unseen units share one outcome, so every level sees them through the same count of zero.
  const bool seen = known(unit);
  double p = 1.0 / static_cast<double>(vocab_size_);
  for (int m = 1; m <= order_; ++m) {
    std::u32string h(m - 1, kBosUnit);
    const std::size_t take = std::min<std::size_t>(m - 1, context.size());
    std::copy(context.end() - static_cast<std::ptrdiff_t>(take), context.end(), h.end() - static_cast<std::ptrdiff_t>(take));
    std::uint64_t c_hu = 0, c_h = 0;
    const auto it = counts_[m - 1].find(h);
    if (it != counts_[m - 1].end()) {
      c_h = it->second.total;
      if (seen) {
        const auto jt = it->second.next.find(unit);
        if (jt != it->second.next.end()) c_hu = jt->second;
      }
    }
    p = (static_cast<double>(c_hu) + kv * p) / (static_cast<double>(c_h) + kv);
  }
  return p;
}

Json NgramLM::to_json() const {
  Json levels = Json::array();
  for (const auto& level : counts_) {
    Json entries = Json::array();
    for (const auto& [h, c] : level) {
      Json next = Json::array();
      for (const auto& [u, n] : c.next) next.push_back({static_cast<std::uint32_t>(u), n});
      Json ctx = Json::array();
      for (const char32_t u : h) ctx.push_back(static_cast<std::uint32_t>(u));
      entries.push_back({{"context", ctx}, {"next", next}});
    }
    levels.push_back(entries);
  }
  Json units = Json::array();
  for (const char32_t u : units_) units.push_back(static_cast<std::uint32_t>(u));
  return Json{{"order", order_}, {"k", k_}, {"vocab_size", vocab_size_}, {"units", units}, {"counts", levels}};
}

NgramLM NgramLM::from_json(const Json& j) {
  NgramLM lm;
  try {
    lm.order_ = j.at("order").get<int>();
    lm.k_ = j.at("k").get<double>();
    lm.vocab_size_ = j.at("vocab_size").get<std::size_t>();
    for (const auto& u : j.at("units")) lm.units_.push_back(static_cast<char32_t>(u.get<std::uint32_t>()));
    for (const auto& level : j.at("counts")) {
      auto& out = lm.counts_.emplace_back();
      for (const auto& e : level) {
        std::u32string h;
        for (const auto& u : e.at("context")) h.push_back(static_cast<char32_t>(u.get<std::uint32_t>()));
        ContextCounts c;
        for (const auto& pair : e.at("next")) {
          const auto n = pair.at(1).get<std::uint64_t>();
          c.next[static_cast<char32_t>(pair.at(0).get<std::uint32_t>())] = n;
          c.total += n;
        }
        out.emplace(std::move(h), std::move(c));
      }
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed n-gram model: ") + e.what());
  }
  if (lm.order_ < 1 || static_cast<int>(lm.counts_.size()) != lm.order_ || (lm.units_.empty() ? lm.vocab_size_ < 1 : lm.vocab_size_ != lm.units_.size() + 1)) {
    throw DataError("malformed n-gram model: inconsistent order or vocabulary");
  }
  return lm;
}

void NgramLM::save(const std::filesystem::path& path) const { write_file(path, canonical_json(to_json()) + "\n"); }

NgramLM NgramLM::load(const std::filesystem::path& path) {
  try {
    return from_json(Json::parse(read_file(path)));
  } catch (const Json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

PerplexityScore perplexity(const NgramLM& lm, const Document& doc) {
  const std::u32string units = utf8::decode(doc.text);
  if (units.empty()) throw DataError("perplexity: document " + doc.id + " is empty");
  double nll = 0.0;
  const std::u32string_view view(units);
  for (std::size_t t = 0; t < units.size(); ++t) nll -= std::log(lm.prob(view.substr(0, t), units[t]));
  return {doc.id, std::exp(nll / static_cast<double>(units.size())), units.size()};
}

}  // namespace langadapt::corpus
