// SPDX-License-Identifier: Apache-2.0
#include "langadapt/corpus/select.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "langadapt/common/error.hpp"
#include "langadapt/common/rng.hpp"

namespace langadapt::corpus {

std::size_t selection_size(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("fraction", "must be in (0, 1]");
  // The epsilon keeps products like 0.3 * 10 from rounding up to 4.
  const double k = std::ceil(fraction * static_cast<double>(n) - 1e-9);
  return std::min(n, static_cast<std::size_t>(std::max(0.0, k)));
}

Corpus random_select(const Corpus& corpus, double fraction, std::uint64_t seed) {
  const std::size_t k = selection_size(corpus.size(), fraction);
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (const auto& d : corpus) ids.push_back(d.id);
  std::sort(ids.begin(), ids.end());
  Rng rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.uniform_int(i)]);
  const std::set<std::string> keep(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k));
  Corpus out;
  out.reserve(k);
  for (const auto& d : corpus) {
    if (keep.count(d.id)) out.push_back(d);
  }
  return out;
}

}  // namespace langadapt::corpus
