// SPDX-License-Identifier: Apache-2.0
#include "langadapt/train/checkpoint.hpp"

#include <cstring>

#include <fmt/format.h>

#include "langadapt/common/error.hpp"
#include "langadapt/common/hash.hpp"
#include "langadapt/common/io.hpp"

namespace langadapt::train {
namespace {

constexpr std::string_view kMagic = "CKPT";
constexpr std::uint32_t kVersion = 1;

template <typename U>
void put(std::string& out, U value) {
  char buf[sizeof(U)];
  std::memcpy(buf, &value, sizeof(U));
  out.append(buf, sizeof(U));
}

void put_string(std::string& out, std::string_view s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return value;
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  std::string_view bytes() const { return bytes_; }
  std::size_t& pos() { return pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError("CKPT: truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
Json checkpoint_config(const ModelParams<T>& p) {
  Json j{{"model", to_json(p.config)},
         {"partition", {{"base_rows", p.partition.base_rows}, {"rows", p.partition.rows}}},
         {"lora", nullptr}};
  if (p.lora) {
    j["lora"] = {{"rank", p.lora->rank}, {"alpha", p.lora->alpha}, {"targets", p.lora->targets}};
  }
  return j;
}

}  // namespace

template <typename T>
std::string serialize_checkpoint(const ModelParams<T>& params, std::uint64_t step) {
  const std::string config = canonical_json(checkpoint_config(params));
  std::string out(kMagic);
  put<std::uint32_t>(out, kVersion);
  put_string(out, sha256_hex(config));
  put<std::uint64_t>(out, step);
  put_string(out, config);
  const auto names = params.tensor_names();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(names.size()));
  for (const auto& name : names) {
    put_string(out, name);
    out += init::encode_emb1(params.tensor(name).template cast<float>());
  }
  return out;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ModelParams<T>& params, std::uint64_t step) {
  write_file(path, serialize_checkpoint(params, step));
}

ModelParams<float> parse_checkpoint(std::string_view bytes, CheckpointInfo* info) {
  Reader r(bytes);
  if (bytes.substr(0, 4) != kMagic) throw DataError("CKPT: bad magic");
  r.pos() = 4;
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) throw DataError(fmt::format("CKPT: unsupported version {}", version));
  CheckpointInfo ci;
  ci.config_hash = r.get_string();
  ci.step = r.get<std::uint64_t>();
  const std::string config_text = r.get_string();
  if (sha256_hex(config_text) != ci.config_hash) throw DataError("CKPT: config hash mismatch");
  const Json config = Json::parse(config_text);

  ModelParams<float> p = build_model<float>(model_config_from_json(config.at("model")), 0);
  p.partition.base_rows = config.at("partition").at("base_rows").get<std::size_t>();
  p.partition.rows = config.at("partition").at("rows").get<std::size_t>();
  if (!config.at("lora").is_null()) {
    LoraConfig lc;
    lc.rank = config["lora"].at("rank").get<int>();
    lc.alpha = config["lora"].at("alpha").get<double>();
    lc.targets = config["lora"].at("targets").get<std::set<std::string>>();
    p.lora = lc;
  }
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.get_string();
    MatrixF m = init::decode_emb1(r.bytes(), r.pos());
    const auto suffix = name.size() > 7 ? name.substr(name.size() - 7) : std::string();
    if (suffix == ".lora_a" || suffix == ".lora_b") {
      auto& ad = p.adapters[name.substr(0, name.size() - 7)];
      (suffix == ".lora_a" ? ad.a : ad.b) = std::move(m);
      continue;
    }
    MatrixF& dst = p.tensor(name);
    if (dst.rows() != m.rows() || dst.cols() != m.cols()) {
      throw DataError(fmt::format("CKPT: tensor {} has shape {}x{}, expected {}x{}", name, m.rows(), m.cols(),
                                  dst.rows(), dst.cols()));
    }
    dst = std::move(m);
  }
  p.trainable.clear();
  for (const auto& n : p.tensor_names()) p.trainable.insert(n);
  if (info) *info = ci;
  return p;
}

ModelParams<float> load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info) {
  const std::string bytes = read_file(path);
  try {
    return parse_checkpoint(bytes, info);
  } catch (const DataError& e) {
    throw IoError(path.string(), e.what());
  } catch (const Json::exception& e) {
    throw IoError(path.string(), std::string("CKPT: bad config: ") + e.what());
  }
}

template void save_checkpoint<float>(const std::filesystem::path&, const ModelParams<float>&, std::uint64_t);
template void save_checkpoint<double>(const std::filesystem::path&, const ModelParams<double>&, std::uint64_t);
template std::string serialize_checkpoint<float>(const ModelParams<float>&, std::uint64_t);
template std::string serialize_checkpoint<double>(const ModelParams<double>&, std::uint64_t);

}  // namespace langadapt::train
