// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace langadapt::tokenizer {

enum class PieceType : std::uint8_t {
  kNormal,
  kUnknown,
  kControl,
  kByte,
};

struct Piece {
  std::string text;
  double score = 0.0;
  PieceType type = PieceType::kNormal;

  bool operator==(const Piece&) const = default;
};

inline constexpr int kUnkId = 0;
inline constexpr int kBosId = 1;
inline constexpr int kEosId = 2;
inline constexpr int kPadId = 3;
inline constexpr int kNumSpecials = 4;
inline constexpr std::array<std::string_view, kNumSpecials> kSpecialPieces = {"<unk>", "<s>", "</s>", "<pad>"};

/// Surface string of the byte piece for `b`, e.g. "<0x41>".
std::string byte_piece_text(std::uint8_t b);

/// Scored unigram vocabulary. Piece index is the token id.
///
/// Layout: the four control pieces occupy ids 0..3, then (when byte
/// fallback is on) the 256 byte pieces, then normal pieces. Only normal
/// pieces take part in segmentation; byte and unk pieces are emitted for
/// codepoints that no normal piece covers.
class SubwordModel {
 public:
  SubwordModel() = default;

  /// Validates uniqueness, finite scores, and the control-piece head.
  explicit SubwordModel(std::vector<Piece> pieces);

  /// Control pieces (+ all byte pieces if byte_fallback) followed by `normal`.
  static SubwordModel with_specials(const std::vector<std::pair<std::string, double>>& normal,
                                    bool byte_fallback);

  const std::vector<Piece>& pieces() const { return pieces_; }
  std::size_t size() const { return pieces_.size(); }
  bool byte_fallback() const { return byte_fallback_; }
  const Piece& piece(int id) const;

  std::optional<int> id_of(std::string_view text) const;

  /// Id of the byte piece for `b`, if present.
  std::optional<int> byte_id(std::uint8_t b) const;

  /// Score assigned to a codepoint that no normal piece covers.
  double fallback_score() const { return fallback_score_; }

  /// Maximum-score segmentation (Viterbi over the piece lattice).
  std::vector<int> encode(std::string_view text) const;

  /// Piece concatenation with byte reassembly. Control pieces render as
  /// nothing; unk renders as U+2047. Throws DataError naming a bad id.
  std::string decode(std::span<const int> ids) const;

  /// Sum of piece scores along a segmentation as encode() scores it.
  double path_score(std::span<const int> ids) const;

  /// Longest normal piece, in codepoints.
  std::size_t max_piece_codepoints() const { return max_piece_len_; }

  void save(const std::filesystem::path& path) const;
  static SubwordModel load(const std::filesystem::path& path);

  std::string serialize() const;
  static SubwordModel parse(std::string_view text);

 private:
  void build_index();

  std::vector<Piece> pieces_;
  std::unordered_map<std::string, int> index_;
  std::unordered_map<std::string, int> normal_index_;
  std::array<int, 256> byte_ids_{};
  bool byte_fallback_ = false;
  double fallback_score_ = 0.0;
  std::size_t max_piece_len_ = 1;
};

/// Escapes tab, newline, carriage return and backslash for the vocab file.
std::string escape_piece(std::string_view text);
std::string unescape_piece(std::string_view text);

}  // namespace langadapt::tokenizer
