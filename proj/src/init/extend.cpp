// SPDX-License-Identifier: Apache-2.0
#include "langadapt/init/extend.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "langadapt/common/error.hpp"
#include "langadapt/common/rng.hpp"

namespace langadapt::init {
namespace {

constexpr double kCovarianceScale = 1e-5;

using tokenizer::kUnkId;

class RowSource {
 public:
  RowSource(const MatrixF& pretrained, bool sampled, std::uint64_t seed)
      : pretrained_(pretrained), sampled_(sampled), rng_(seed) {
    const MatrixD x = pretrained.cast<double>();
    mean_ = x.colwise().mean().transpose();
    if (sampled) {
      const MatrixD centered = x.rowwise() - mean_.transpose();
      const double denom = std::max<double>(1.0, static_cast<double>(x.rows()) - 1.0);
      const MatrixD cov = (centered.transpose() * centered) / denom * kCovarianceScale;
      Eigen::SelfAdjointEigenSolver<MatrixD> eig(cov);
      const Eigen::VectorXd sd = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
      factor_ = eig.eigenvectors() * sd.asDiagonal();
    }
  }

  Eigen::RowVectorXf average() {
    if (!sampled_) return mean_.transpose().cast<float>();
    Eigen::VectorXd z(mean_.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng_.normal();
    return (mean_ + factor_ * z).transpose().cast<float>();
  }

  Eigen::RowVectorXf decomposed(const std::vector<int>& ids) const {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(pretrained_.cols());
    for (int id : ids) acc += pretrained_.row(id).cast<double>();
    return (acc / static_cast<double>(ids.size())).cast<float>();
  }

 private:
  const MatrixF& pretrained_;
  bool sampled_;
  Rng rng_;
  Eigen::VectorXd mean_;
  MatrixD factor_;
};

}  // namespace

const std::vector<InitVariant>& all_variants() {
  static const std::vector<InitVariant> v = {InitVariant::kRandom, InitVariant::kAvgE, InitVariant::kDecompE,
                                             InitVariant::kAvgEH, InitVariant::kDecompEH};
  return v;
}

std::string to_string(InitVariant v) {
  switch (v) {
    case InitVariant::kRandom: return "random";
    case InitVariant::kAvgE: return "avg_E";
    case InitVariant::kDecompE: return "decomp_E";
    case InitVariant::kAvgEH: return "avg_EH";
    case InitVariant::kDecompEH: return "decomp_EH";
  }
  return "?";
}

InitVariant parse_variant(std::string_view name) {
  for (InitVariant v : all_variants())
    if (to_string(v) == name) return v;
  throw ConfigError("method", fmt::format("unknown init method '{}'", name));
}

std::vector<int> decompose_piece(std::string_view piece, const tokenizer::SubwordModel& base) {
  if (piece.empty()) throw DataError("cannot decompose an empty piece");
  return base.encode(piece);
}

Extended extend_vocab(const MatrixF& embed, const MatrixF& head, const tokenizer::SubwordModel& base,
                      const tokenizer::SubwordModel& merged, const InitMethod& method, std::uint64_t seed) {
  if (!(method.random_scale > 0.0)) throw ConfigError("random_scale", "must be positive");
  const auto base_rows = static_cast<Eigen::Index>(base.size());
  if (embed.rows() != base_rows || head.rows() != base_rows) {
    throw DataError(fmt::format("E/H have {}/{} rows but the base tokenizer has {} pieces", embed.rows(), head.rows(),
                                base_rows));
  }
  if (embed.cols() != head.cols()) throw DataError("E and H widths differ");
  if (merged.size() < base.size()) throw DataError("merged vocabulary is smaller than the base");
  for (int id = 0; id < static_cast<int>(base.size()); ++id) {
    if (merged.piece(id).text != base.piece(id).text) {
      throw DataError(fmt::format("merged vocabulary changes base id {} ('{}')", id, base.piece(id).text));
    }
  }

  const auto rows = static_cast<Eigen::Index>(merged.size());
  Extended out;
  out.partition = {base.size(), merged.size()};
  out.embed.resize(rows, embed.cols());
  out.head.resize(rows, head.cols());
  out.embed.topRows(base_rows) = embed;
  out.head.topRows(base_rows) = head;

  const InitVariant v = method.variant;
  const bool avg_e = v == InitVariant::kAvgE || v == InitVariant::kAvgEH;
  const bool avg_h = v == InitVariant::kAvgEH;
  const bool decomp_e = v == InitVariant::kDecompE || v == InitVariant::kDecompEH;
  const bool decomp_h = v == InitVariant::kDecompEH;

  Rng random_e(derive_seed(seed, 1)), random_h(derive_seed(seed, 2));
  RowSource src_e(embed, method.sampled, derive_seed(seed, 3));
  RowSource src_h(head, method.sampled, derive_seed(seed, 4));
  auto random_row = [&](Rng& rng, Eigen::Index cols) {
    Eigen::RowVectorXf r(cols);
    for (Eigen::Index j = 0; j < cols; ++j) r(j) = static_cast<float>(rng.normal(0.0, method.random_scale));
    return r;
  };

  for (Eigen::Index id = base_rows; id < rows; ++id) {
    std::vector<int> parts;
    bool fallback = false;
    if (decomp_e || decomp_h) {
      parts = decompose_piece(merged.piece(static_cast<int>(id)).text, base);
      std::vector<int> known;
      std::copy_if(parts.begin(), parts.end(), std::back_inserter(known), [](int p) { return p != kUnkId; });
      if (known.empty()) {
        fallback = true;
        out.report.avg_fallback.push_back(merged.piece(static_cast<int>(id)).text);
      } else {
        parts = std::move(known);
      }
    }
    // Draw the random rows unconditionally so each stream stays aligned to ids.
    const Eigen::RowVectorXf re = random_row(random_e, embed.cols());
    const Eigen::RowVectorXf rh = random_row(random_h, head.cols());

    if (decomp_e) {
      out.embed.row(id) = fallback ? src_e.average() : src_e.decomposed(parts);
    } else if (avg_e) {
      out.embed.row(id) = src_e.average();
    } else {
      out.embed.row(id) = re;
    }
    if (decomp_h) {
      out.head.row(id) = fallback ? src_h.average() : src_h.decomposed(parts);
    } else if (avg_h) {
      out.head.row(id) = src_h.average();
    } else {
      out.head.row(id) = rh;
    }
  }
  return out;
}

}  // namespace langadapt::init
