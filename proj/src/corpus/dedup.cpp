// SPDX-License-Identifier: Apache-2.0
#include "langadapt/corpus/dedup.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "langadapt/common/error.hpp"
#include "langadapt/common/hash.hpp"
#include "langadapt/common/rng.hpp"
#include "langadapt/common/utf8.hpp"

namespace langadapt::corpus {
namespace {

constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

std::uint64_t mod_mersenne61(unsigned __int128 x) {
  std::uint64_t r = static_cast<std::uint64_t>(x & kMersenne61) + static_cast<std::uint64_t>(x >> 61);
  r = (r & kMersenne61) + (r >> 61);
  return r >= kMersenne61 ? r - kMersenne61 : r;
}

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  // The smaller index becomes the root, so roots are earliest members.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;
  }
  std::vector<std::size_t> parent;
};

}  // namespace

void validate(const DedupConfig& cfg) {
  if (cfg.shingle_n < 1) throw ConfigError("shingle_n", "must be >= 1");
  if (cfg.num_hashes < 1) throw ConfigError("num_hashes", "must be >= 1");
  if (cfg.bands < 1 || cfg.num_hashes % cfg.bands != 0) throw ConfigError("bands", "must divide num_hashes");
  if (!(cfg.jaccard_threshold > 0.0 && cfg.jaccard_threshold <= 1.0)) {
    throw ConfigError("jaccard_threshold", "must be in (0, 1]");
  }
}

Json to_json(const DedupConfig& cfg) {
  return Json{{"shingle_n", cfg.shingle_n},
              {"num_hashes", cfg.num_hashes},
              {"bands", cfg.bands},
              {"jaccard_threshold", cfg.jaccard_threshold},
              {"seed", cfg.seed}};
}

DedupConfig dedup_config_from_json(const Json& j) {
  DedupConfig cfg;
  try {
    cfg.shingle_n = j.value("shingle_n", cfg.shingle_n);
    cfg.num_hashes = j.value("num_hashes", cfg.num_hashes);
    cfg.bands = j.value("bands", cfg.bands);
    cfg.jaccard_threshold = j.value("jaccard_threshold", cfg.jaccard_threshold);
    cfg.seed = j.value("seed", cfg.seed);
  } catch (const Json::exception& e) {
    throw ConfigError("dedup", e.what());
  }
  return cfg;
}

std::vector<std::uint64_t> shingles(const std::string& text, int n) {
  const auto bounds = utf8::boundaries(text);
  const std::size_t cps = bounds.size() - 1;
  std::vector<std::uint64_t> out;
  if (cps < static_cast<std::size_t>(n)) return out;
  for (std::size_t i = 0; i + n <= cps; ++i) {
    out.push_back(fnv1a64(std::string_view(text).substr(bounds[i], bounds[i + n] - bounds[i])));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double exact_jaccard(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::vector<std::uint64_t> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  const double inter = static_cast<double>(common.size());
  return inter / (static_cast<double>(a.size() + b.size()) - inter);
}

MinHasher::MinHasher(const DedupConfig& cfg) {
  Rng rng(cfg.seed);
  for (int i = 0; i < cfg.num_hashes; ++i) {
    a_.push_back(1 + rng.uniform_int(kMersenne61 - 1));
    b_.push_back(rng.uniform_int(kMersenne61));
  }
}

std::vector<std::uint64_t> MinHasher::signature(const std::vector<std::uint64_t>& shingle_set) const {
  std::vector<std::uint64_t> sig(a_.size(), kMersenne61);
  for (const std::uint64_t s : shingle_set) {
    const std::uint64_t x = s % kMersenne61;
    for (std::size_t i = 0; i < a_.size(); ++i) {
      const std::uint64_t h = mod_mersenne61(static_cast<unsigned __int128>(a_[i]) * x + b_[i]);
      sig[i] = std::min(sig[i], h);
    }
  }
  return sig;
}

double MinHasher::estimate(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  std::size_t eq = 0;
  for (std::size_t i = 0; i < a.size(); ++i) eq += a[i] == b[i];
  return a.empty() ? 0.0 : static_cast<double>(eq) / static_cast<double>(a.size());
}

Json to_json(const DedupReport& r) {
  Json clusters = Json::array();
  for (const auto& c : r.clusters) {
    clusters.push_back({{"kept", c.kept}, {"members", c.members}, {"similarity", c.similarity}});
  }
  return Json{{"clusters", clusters},
              {"too_short", r.too_short},
              {"candidate_pairs", r.candidate_pairs},
              {"removed", r.removed}};
}

DedupResult dedup(const Corpus& corpus, const DedupConfig& cfg) {
  validate(cfg);
  if (corpus.empty()) throw DataError("dedup: corpus is empty");
  const std::size_t n = corpus.size();
  const MinHasher hasher(cfg);
  std::vector<std::vector<std::uint64_t>> sigs(n);
  std::vector<bool> short_doc(n, false);
  DedupResult out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto sh = shingles(corpus[i].text, cfg.shingle_n);
    if (sh.empty()) {
      short_doc[i] = true;
      out.report.too_short.push_back(corpus[i].id);
      continue;
    }
    sigs[i] = hasher.signature(sh);
  }

  const int rows = cfg.num_hashes / cfg.bands;
  std::set<std::pair<std::size_t, std::size_t>> candidates;
  for (int band = 0; band < cfg.bands; ++band) {
    std::map<std::uint64_t, std::vector<std::size_t>> buckets;
    for (std::size_t i = 0; i < n; ++i) {
      if (short_doc[i]) continue;
      const auto* p = sigs[i].data() + static_cast<std::ptrdiff_t>(band) * rows;
      const std::uint64_t key = fnv1a64(std::string_view(reinterpret_cast<const char*>(p), rows * sizeof(std::uint64_t)),
                                        static_cast<std::uint64_t>(band));
      buckets[key].push_back(i);
    }
    for (const auto& [key, members] : buckets) {
      for (std::size_t x = 0; x < members.size(); ++x) {
        for (std::size_t y = x + 1; y < members.size(); ++y) candidates.emplace(members[x], members[y]);
      }
    }
  }
  out.report.candidate_pairs = candidates.size();

  UnionFind uf(n);
  for (const auto& [i, j] : candidates) {
    if (MinHasher::estimate(sigs[i], sigs[j]) >= cfg.jaccard_threshold) uf.unite(i, j);
  }

  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[uf.find(i)].push_back(i);
  for (const auto& [root, members] : groups) {
    if (members.size() < 2) continue;
    DedupCluster c;
    c.kept = corpus[root].id;
    for (const std::size_t m : members) {
      c.members.push_back(corpus[m].id);
      c.similarity.push_back(MinHasher::estimate(sigs[root], sigs[m]));
    }
    out.report.clusters.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (uf.find(i) == i) out.corpus.push_back(corpus[i]);
  }
  out.report.removed = n - out.corpus.size();
  return out;
}

}  // namespace langadapt::corpus
