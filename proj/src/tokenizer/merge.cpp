// SPDX-License-Identifier: Apache-2.0
#include "langadapt/tokenizer/merge.hpp"

#include <algorithm>
#include <limits>
#include <utility>

namespace langadapt::tokenizer {
namespace {

std::pair<double, double> normal_score_range(const SubwordModel& m) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const Piece& p : m.pieces()) {
    if (p.type != PieceType::kNormal) continue;
    lo = std::min(lo, p.score);
    hi = std::max(hi, p.score);
  }
  return {lo, hi};
}

}  // namespace

MergeResult merge(const SubwordModel& base, const SubwordModel& added) {
  const auto [base_lo, base_hi] = normal_score_range(base);
  const auto [new_lo, new_hi] = normal_score_range(added);
  const bool base_has_normal = base_lo <= base_hi;

  auto rescale = [&](double s) {
    if (!base_has_normal) return s;
    if (new_hi <= new_lo) return 0.5 * (base_lo + base_hi);
    return base_lo + (s - new_lo) * (base_hi - base_lo) / (new_hi - new_lo);
  };

  MergeResult result;
  std::vector<Piece> pieces = base.pieces();
  for (const Piece& p : added.pieces()) {
    if (base.id_of(p.text)) {
      ++result.overlap;
      continue;
    }
    Piece q = p;
    if (q.type == PieceType::kNormal) q.score = rescale(q.score);
    pieces.push_back(std::move(q));
  }
  result.model = SubwordModel(std::move(pieces));
  return result;
}

}  // namespace langadapt::tokenizer
