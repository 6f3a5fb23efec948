// SPDX-License-Identifier: Apache-2.0
#include "langadapt/tokenizer/subword_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "langadapt/common/error.hpp"
#include "langadapt/common/io.hpp"
#include "langadapt/common/utf8.hpp"

namespace langadapt::tokenizer {
namespace {

constexpr double kUnkPenalty = 10.0;
constexpr std::string_view kUnkSurface = "\xE2\x81\x87";  // U+2047

bool parse_byte_piece(std::string_view text, std::uint8_t& out) {
  if (text.size() != 6 || text.substr(0, 3) != "<0x" || text.back() != '>') return false;
  unsigned value = 0;
  const auto res = std::from_chars(text.data() + 3, text.data() + 5, value, 16);
  if (res.ec != std::errc{} || res.ptr != text.data() + 5) return false;
  if (byte_piece_text(static_cast<std::uint8_t>(value)) != text) return false;
  out = static_cast<std::uint8_t>(value);
  return true;
}

}  // namespace

std::string byte_piece_text(std::uint8_t b) { return fmt::format("<0x{:02X}>", b); }

SubwordModel::SubwordModel(std::vector<Piece> pieces) : pieces_(std::move(pieces)) { build_index(); }

SubwordModel SubwordModel::with_specials(const std::vector<std::pair<std::string, double>>& normal,
                                         bool byte_fallback) {
  std::vector<Piece> pieces;
  pieces.reserve(kNumSpecials + (byte_fallback ? 256 : 0) + normal.size());
  for (int i = 0; i < kNumSpecials; ++i) {
    pieces.push_back({std::string(kSpecialPieces[i]), 0.0, i == kUnkId ? PieceType::kUnknown : PieceType::kControl});
  }
  if (byte_fallback) {
    for (int b = 0; b < 256; ++b) pieces.push_back({byte_piece_text(static_cast<std::uint8_t>(b)), 0.0, PieceType::kByte});
  }
  for (const auto& [text, score] : normal) pieces.push_back({text, score, PieceType::kNormal});
  return SubwordModel(std::move(pieces));
}

void SubwordModel::build_index() {
  if (pieces_.size() < kNumSpecials) throw DataError("subword model needs the four control pieces");
  for (int i = 0; i < kNumSpecials; ++i) {
    const auto expected = i == kUnkId ? PieceType::kUnknown : PieceType::kControl;
    if (pieces_[i].text != kSpecialPieces[i] || pieces_[i].type != expected) {
      throw DataError(fmt::format("piece {} must be control piece {}", i, kSpecialPieces[i]));
    }
  }
  index_.clear();
  normal_index_.clear();
  byte_ids_.fill(-1);
  max_piece_len_ = 1;
  double min_score = std::numeric_limits<double>::infinity();
  int byte_count = 0;
  for (int id = 0; id < static_cast<int>(pieces_.size()); ++id) {
    const Piece& p = pieces_[id];
    if (p.text.empty()) throw DataError(fmt::format("piece {} is empty", id));
    if (!std::isfinite(p.score)) throw DataError(fmt::format("piece {} has non-finite score", id));
    if (!utf8::is_valid(p.text)) throw DataError(fmt::format("piece {} is not valid UTF-8", id));
    if (!index_.emplace(p.text, id).second) throw DataError(fmt::format("duplicate piece '{}'", p.text));
    if (id >= kNumSpecials && (p.type == PieceType::kControl || p.type == PieceType::kUnknown)) {
      throw DataError(fmt::format("control piece '{}' outside the head", p.text));
    }
    if (p.type == PieceType::kByte) {
      std::uint8_t b = 0;
      if (!parse_byte_piece(p.text, b)) throw DataError(fmt::format("bad byte piece '{}'", p.text));
      byte_ids_[b] = id;
      ++byte_count;
    } else if (p.type == PieceType::kNormal) {
      normal_index_.emplace(p.text, id);
      max_piece_len_ = std::max(max_piece_len_, utf8::length(p.text));
      min_score = std::min(min_score, p.score);
    }
  }
  byte_fallback_ = byte_count == 256;
  fallback_score_ = (std::isfinite(min_score) ? min_score : 0.0) - kUnkPenalty;
}

const Piece& SubwordModel::piece(int id) const {
  if (id < 0 || id >= static_cast<int>(pieces_.size())) {
    throw DataError(fmt::format("token id {} out of range [0, {})", id, pieces_.size()));
  }
  return pieces_[id];
}

std::optional<int> SubwordModel::id_of(std::string_view text) const {
  const auto it = index_.find(std::string(text));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> SubwordModel::byte_id(std::uint8_t b) const {
  if (byte_ids_[b] < 0) return std::nullopt;
  return byte_ids_[b];
}

std::vector<int> SubwordModel::encode(std::string_view text) const {
  if (text.empty()) return {};
  const auto bounds = utf8::boundaries(text);
  const std::size_t n = bounds.size() - 1;

  constexpr int kFallback = -1;
  std::vector<double> best(n + 1, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> back_start(n + 1, 0);
  std::vector<int> back_id(n + 1, kFallback);
  best[0] = 0.0;

  std::string key;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t limit = std::min(n, s + max_piece_len_);
    bool single_covered = false;
    for (std::size_t e = s + 1; e <= limit; ++e) {
      key.assign(text.data() + bounds[s], bounds[e] - bounds[s]);
      const auto it = normal_index_.find(key);
      if (it == normal_index_.end()) continue;
      if (e == s + 1) single_covered = true;
      const double cand = best[s] + pieces_[it->second].score;
      if (cand > best[e]) {
        best[e] = cand;
        back_start[e] = s;
        back_id[e] = it->second;
      }
    }
    if (!single_covered) {
      const double cand = best[s] + fallback_score_;
      if (cand > best[s + 1]) {
        best[s + 1] = cand;
        back_start[s + 1] = s;
        back_id[s + 1] = kFallback;
      }
    }
  }

  std::vector<std::pair<std::size_t, int>> path;  // (start codepoint, id or fallback)
  for (std::size_t e = n; e > 0; e = back_start[e]) path.emplace_back(back_start[e], back_id[e]);
  std::reverse(path.begin(), path.end());

  std::vector<int> ids;
  ids.reserve(path.size());
  for (const auto& [start, id] : path) {
    if (id != kFallback) {
      ids.push_back(id);
    } else if (byte_fallback_) {
      for (std::size_t b = bounds[start]; b < bounds[start + 1]; ++b) {
        ids.push_back(byte_ids_[static_cast<unsigned char>(text[b])]);
      }
    } else {
      ids.push_back(kUnkId);
    }
  }
  return ids;
}

std::string SubwordModel::decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    const Piece& p = piece(id);
    switch (p.type) {
      case PieceType::kNormal: out += p.text; break;
      case PieceType::kUnknown: out += kUnkSurface; break;
      case PieceType::kControl: break;
      case PieceType::kByte: {
        std::uint8_t b = 0;
        parse_byte_piece(p.text, b);
        out.push_back(static_cast<char>(b));
        break;
      }
    }
  }
  return out;
}

double SubwordModel::path_score(std::span<const int> ids) const {
  double total = 0.0;
  for (int id : ids) {
    const Piece& p = piece(id);
    if (p.type == PieceType::kNormal) {
      total += p.score;
    } else if (p.type == PieceType::kUnknown) {
      total += fallback_score_;
    } else if (p.type == PieceType::kByte) {
      std::uint8_t b = 0;
      parse_byte_piece(p.text, b);
      if ((b & 0xC0) != 0x80) total += fallback_score_;  // one edge per codepoint
    }
  }
  return total;
}

std::string escape_piece(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string unescape_piece(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\') {
      out.push_back(text[i]);
      continue;
    }
    if (i + 1 >= text.size()) throw DataError("dangling escape in piece");
    switch (text[++i]) {
      case '\\': out.push_back('\\'); break;
      case 't': out.push_back('\t'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      default: throw DataError(fmt::format("unknown escape '\\{}' in piece", text[i]));
    }
  }
  return out;
}

std::string SubwordModel::serialize() const {
  std::string out;
  for (const Piece& p : pieces_) {
    out += escape_piece(p.text);
    out += '\t';
    out += format_double(p.score);
    out += '\n';
  }
  return out;
}

SubwordModel SubwordModel::parse(std::string_view text) {
  std::vector<Piece> pieces;
  std::size_t pos = 0;
  std::size_t lineno = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineno;
    if (line.empty()) continue;
    const std::size_t tab = line.rfind('\t');
    if (tab == std::string_view::npos) throw DataError(fmt::format("vocab line {}: missing tab", lineno));
    Piece p;
    p.text = unescape_piece(line.substr(0, tab));
    const std::string_view num = line.substr(tab + 1);
    const auto res = std::from_chars(num.data(), num.data() + num.size(), p.score);
    if (res.ec != std::errc{} || res.ptr != num.data() + num.size()) {
      throw DataError(fmt::format("vocab line {}: bad score '{}'", lineno, num));
    }
    const int id = static_cast<int>(pieces.size());
    std::uint8_t b = 0;
    if (id < kNumSpecials) {
      p.type = id == kUnkId ? PieceType::kUnknown : PieceType::kControl;
    } else if (parse_byte_piece(p.text, b)) {
      p.type = PieceType::kByte;
    }
    pieces.push_back(std::move(p));
  }
  return SubwordModel(std::move(pieces));
}

void SubwordModel::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

SubwordModel SubwordModel::load(const std::filesystem::path& path) { return parse(read_file(path)); }

}  // namespace langadapt::tokenizer
