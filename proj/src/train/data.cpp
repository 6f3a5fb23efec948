// SPDX-License-Identifier: Apache-2.0
#include "langadapt/train/data.hpp"

#include <numeric>

#include "langadapt/common/error.hpp"

namespace langadapt::train {

std::vector<Sample> pack_samples(const tokenizer::SubwordModel& tok, std::span<const std::string> texts, int context) {
  if (context < 2) throw ConfigError("context", "must be >= 2");
  std::vector<int> stream;
  for (const auto& t : texts) {
    const auto ids = tok.encode(t);
    stream.insert(stream.end(), ids.begin(), ids.end());
  }
  std::vector<Sample> out;
  for (std::size_t i = 0; i + context <= stream.size(); i += context) {
    out.emplace_back(stream.begin() + static_cast<std::ptrdiff_t>(i), stream.begin() + static_cast<std::ptrdiff_t>(i + context));
  }
  return out;
}

BatchStream::BatchStream(const std::vector<Sample>& samples, int batch_size, std::uint64_t seed)
    : samples_(samples), batch_size_(static_cast<std::size_t>(batch_size)), rng_(seed) {
  if (samples.empty()) throw DataError("no training samples");
  if (batch_size < 1) throw ConfigError("batch", "must be >= 1");
  order_.resize(samples.size());
  reshuffle();
}

void BatchStream::reshuffle() {
  std::iota(order_.begin(), order_.end(), 0);
  for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng_.uniform_int(i)]);
  cursor_ = 0;
}

Batch BatchStream::next() {
  const std::size_t take = std::min(batch_size_, order_.size());
  if (cursor_ + take > order_.size()) reshuffle();
  Batch b;
  b.reserve(take);
  for (std::size_t i = 0; i < take; ++i) b.push_back(samples_[order_[cursor_ + i]]);
  cursor_ += take;
  return b;
}

template <typename T>
EvalResult evaluate(const ModelParams<T>& params, const std::vector<Sample>& samples, int batch_size) {
  if (samples.empty()) throw DataError("empty eval set");
  double loss = 0.0, acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < samples.size(); i += static_cast<std::size_t>(batch_size)) {
    const auto end = std::min(samples.size(), i + static_cast<std::size_t>(batch_size));
    const Batch b(samples.begin() + static_cast<std::ptrdiff_t>(i), samples.begin() + static_cast<std::ptrdiff_t>(end));
    const auto r = forward_loss(params, b);
    loss += r.loss * static_cast<double>(r.predictions);
    acc += r.accuracy * static_cast<double>(r.predictions);
    n += r.predictions;
  }
  return {loss / static_cast<double>(n), acc / static_cast<double>(n), n};
}

template <typename T>
EvalResult evaluate_clm(const ModelParams<T>& params, std::span<const std::string> texts,
                        const tokenizer::SubwordModel& tok) {
  return evaluate(params, pack_samples(tok, texts, params.config.context));
}

template EvalResult evaluate<float>(const ModelParams<float>&, const std::vector<Sample>&, int);
template EvalResult evaluate<double>(const ModelParams<double>&, const std::vector<Sample>&, int);
template EvalResult evaluate_clm<float>(const ModelParams<float>&, std::span<const std::string>,
                                        const tokenizer::SubwordModel&);
template EvalResult evaluate_clm<double>(const ModelParams<double>&, std::span<const std::string>,
                                         const tokenizer::SubwordModel&);

}  // namespace langadapt::train
