// SPDX-License-Identifier: Apache-2.0
#include "langadapt/tokenizer/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "langadapt/common/error.hpp"
#include "langadapt/common/utf8.hpp"

namespace langadapt::tokenizer {
namespace {

bool in_ranges(const std::vector<CodepointRange>& ranges, std::string_view text) {
  if (ranges.empty()) return true;
  for (char32_t cp : utf8::decode(text)) {
    const bool ok = std::any_of(ranges.begin(), ranges.end(), [cp](const CodepointRange& r) { return cp >= r.lo && cp <= r.hi; });
    if (!ok) return false;
  }
  return true;
}

bool is_protected(const Piece& p) { return p.type != PieceType::kNormal || utf8::length(p.text) == 1; }

}  // namespace

void validate_rules(const PieceFilterRules& rules) {
  auto ranges = rules.allowed_ranges;
  for (const auto& r : ranges) {
    if (r.lo > r.hi) throw ConfigError("allowed_ranges", fmt::format("inverted range {:#x}-{:#x}", +r.lo, +r.hi));
  }
  std::sort(ranges.begin(), ranges.end(), [](const CodepointRange& a, const CodepointRange& b) { return a.lo < b.lo; });
  for (std::size_t i = 1; i < ranges.size(); ++i) {
    if (ranges[i].lo <= ranges[i - 1].hi) {
      throw ConfigError("allowed_ranges", fmt::format("ranges overlap at {:#x}", +ranges[i].lo));
    }
  }
  for (const auto& m : rules.manual_add) {
    if (m.score_policy != "tail") throw ConfigError("manual_add", "unknown score policy '" + m.score_policy + "'");
    if (m.piece.empty() || !utf8::is_valid(m.piece)) throw ConfigError("manual_add", "piece must be non-empty UTF-8");
  }
}

RefineResult refine_pieces(const SubwordModel& model, const PieceFilterRules& rules,
                           std::span<const std::string> corpus) {
  validate_rules(rules);
  RefineResult result;
  RefineReport& report = result.report;
  const std::set<std::string> deny(rules.manual_deny.begin(), rules.manual_deny.end());

  std::vector<Piece> kept;
  for (const Piece& p : model.pieces()) {
    if (is_protected(p)) {
      kept.push_back(p);
    } else if (!in_ranges(rules.allowed_ranges, p.text)) {
      report.removed_by_range.push_back(p.text);
    } else if (rules.max_piece_len > 0 && utf8::length(p.text) > rules.max_piece_len) {
      report.removed_by_length.push_back(p.text);
    } else if (deny.count(p.text)) {
      report.removed_by_deny.push_back(p.text);
    } else {
      kept.push_back(p);
    }
  }

  if (rules.min_corpus_freq > 0) {
    const SubwordModel filtered(kept);
    std::vector<std::uint64_t> freq(filtered.size(), 0);
    for (const auto& doc : corpus)
      for (int id : filtered.encode(doc)) ++freq[id];
    std::vector<Piece> survivors;
    for (int id = 0; id < static_cast<int>(filtered.size()); ++id) {
      const Piece& p = filtered.piece(id);
      if (!is_protected(p) && freq[id] < rules.min_corpus_freq) {
        report.removed_by_frequency.push_back(p.text);
      } else {
        survivors.push_back(p);
      }
    }
    kept = std::move(survivors);
  }

  double min_score = std::numeric_limits<double>::infinity();
  for (const Piece& p : kept)
    if (p.type == PieceType::kNormal) min_score = std::min(min_score, p.score);
  const double tail_score = (std::isfinite(min_score) ? min_score : 0.0) - 1.0;
  std::set<std::string> present;
  for (const Piece& p : kept) present.insert(p.text);
  for (const ManualPiece& m : rules.manual_add) {
    if (!present.insert(m.piece).second) {
      report.add_collisions.push_back(m.piece);
      continue;
    }
    kept.push_back({m.piece, tail_score, PieceType::kNormal});
    report.added.push_back(m.piece);
  }
  result.model = SubwordModel(std::move(kept));
  return result;
}

}  // namespace langadapt::tokenizer
