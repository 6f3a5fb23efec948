// SPDX-License-Identifier: Apache-2.0
#include "langadapt/init/embedding.hpp"

#include <bit>
#include <cstdint>
#include <cstring>

#include <fmt/format.h>

#include "langadapt/common/error.hpp"
#include "langadapt/common/io.hpp"

namespace langadapt::init {
namespace {

static_assert(std::endian::native == std::endian::little, "EMB1 I/O assumes a little-endian host");

constexpr std::string_view kMagic = "EMB1";
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::size_t kHeaderSize = 4 + 4 + 8 + 8 + 1;

template <typename U>
void put(std::string& out, U value) {
  char buf[sizeof(U)];
  std::memcpy(buf, &value, sizeof(U));
  out.append(buf, sizeof(U));
}

template <typename U>
U get(std::string_view bytes, std::size_t offset) {
  U value;
  std::memcpy(&value, bytes.data() + offset, sizeof(U));
  return value;
}

}  // namespace

std::string encode_emb1(const MatrixF& m) {
  std::string out;
  out.reserve(kHeaderSize + m.size() * sizeof(float));
  out.append(kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  put<std::uint8_t>(out, kDtypeF32);
  out.append(reinterpret_cast<const char*>(m.data()), m.size() * sizeof(float));
  return out;
}

MatrixF decode_emb1(std::string_view bytes, std::size_t& offset) {
  if (bytes.size() < offset + kHeaderSize) throw DataError("EMB1: truncated header");
  if (bytes.substr(offset, 4) != kMagic) throw DataError("EMB1: bad magic");
  const auto version = get<std::uint32_t>(bytes, offset + 4);
  if (version != kVersion) throw DataError(fmt::format("EMB1: unsupported version {}", version));
  const auto rows = get<std::uint64_t>(bytes, offset + 8);
  const auto cols = get<std::uint64_t>(bytes, offset + 16);
  const auto dtype = get<std::uint8_t>(bytes, offset + 24);
  if (dtype != kDtypeF32) throw DataError(fmt::format("EMB1: unsupported dtype {}", dtype));
  const std::uint64_t payload = rows * cols * sizeof(float);
  if (bytes.size() - offset - kHeaderSize < payload) throw DataError("EMB1: truncated data");
  MatrixF m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::memcpy(m.data(), bytes.data() + offset + kHeaderSize, payload);
  offset += kHeaderSize + payload;
  return m;
}

void save_matrix(const std::filesystem::path& path, const MatrixF& m) { write_file(path, encode_emb1(m)); }

MatrixF load_matrix(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::size_t offset = 0;
  try {
    MatrixF m = decode_emb1(bytes, offset);
    if (offset != bytes.size()) throw DataError("EMB1: trailing bytes");
    return m;
  } catch (const DataError& e) {
    throw IoError(path.string(), e.what());
  }
}

}  // namespace langadapt::init
