// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "langadapt/corpus/document.hpp"

namespace langadapt::corpus {

/// Number of documents random_select keeps: ceil(fraction * n).
std::size_t selection_size(std::size_t n, double fraction);

/// Keeps ceil(fraction * N) documents. Ids are sorted, shuffled with
/// Fisher-Yates driven by Rng(seed) (i from N-1 down to 1, j =
/// uniform_int(i + 1)), and the first k of the shuffle are kept; output
/// follows input order. Throws ConfigError unless 0 < fraction <= 1.
Corpus random_select(const Corpus& corpus, double fraction, std::uint64_t seed);

}  // namespace langadapt::corpus
