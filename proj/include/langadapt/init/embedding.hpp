// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace langadapt {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MatrixF = Matrix<float>;
using MatrixD = Matrix<double>;

}  // namespace langadapt

namespace langadapt::init {

/// Rows [0, base_rows) come from the pretrained model; [base_rows, rows) are new.
/// Merging keeps base ids as a prefix, so the two index sets are ranges.
struct VocabPartition {
  std::size_t base_rows = 0;
  std::size_t rows = 0;

  bool is_new(std::size_t id) const { return id >= base_rows && id < rows; }
  std::size_t new_count() const { return rows - base_rows; }
};

/// EMB1 tensor encoding: "EMB1", u32 version (1), u64 rows, u64 cols,
/// u8 dtype (0 = float32), then row-major little-endian float32 data.
std::string encode_emb1(const MatrixF& m);

/// Parses one EMB1 record starting at `offset` and advances it.
/// Throws DataError on a bad magic, version, dtype or truncated data.
MatrixF decode_emb1(std::string_view bytes, std::size_t& offset);

void save_matrix(const std::filesystem::path& path, const MatrixF& m);
MatrixF load_matrix(const std::filesystem::path& path);

}  // namespace langadapt::init
