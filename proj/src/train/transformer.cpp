// SPDX-License-Identifier: Apache-2.0
#include "langadapt/train/transformer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "langadapt/common/error.hpp"

namespace langadapt::train {
namespace {

template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

struct Shape {
  int batch = 0;
  int len = 0;
  int rows() const { return batch * len; }
};

Shape check_batch(const ModelConfig& cfg, const Batch& batch) {
  if (batch.empty()) throw DataError("empty batch");
  const auto len = batch.front().size();
  if (len < 2) throw DataError("sequences need at least 2 tokens");
  if (len > static_cast<std::size_t>(cfg.context)) {
    throw DataError(fmt::format("sequence length {} exceeds context {}", len, cfg.context));
  }
  for (const auto& seq : batch) {
    if (seq.size() != len) throw DataError("ragged batch");
    for (int id : seq) {
      if (id < 0 || id >= cfg.vocab) throw DataError(fmt::format("token id {} out of range [0, {})", id, cfg.vocab));
    }
  }
  return {static_cast<int>(batch.size()), static_cast<int>(len)};
}

template <typename T>
struct Rope {
  Matrix<T> cos, sin;  // len x half

  Rope(const ModelConfig& cfg, int len) {
    const int half = cfg.head_dim() / 2;
    cos.resize(len, half);
    sin.resize(len, half);
    for (int t = 0; t < len; ++t) {
      for (int i = 0; i < half; ++i) {
        const double theta = t * std::pow(cfg.rope_base, -2.0 * i / cfg.head_dim());
        cos(t, i) = static_cast<T>(std::cos(theta));
        sin(t, i) = static_cast<T>(std::sin(theta));
      }
    }
  }

  // Rotate-half convention on each head; inverse applies the transpose rotation.
  void apply(Matrix<T>& x, int len, int heads, int head_dim, bool inverse) const {
    const int half = head_dim / 2;
    for (Eigen::Index n = 0; n < x.rows(); ++n) {
      const int t = static_cast<int>(n % len);
      for (int h = 0; h < heads; ++h) {
        T* row = x.row(n).data() + h * head_dim;
        for (int i = 0; i < half; ++i) {
          const T c = cos(t, i), s = inverse ? -sin(t, i) : sin(t, i);
          const T x1 = row[i], x2 = row[i + half];
          row[i] = x1 * c - x2 * s;
          row[i + half] = x2 * c + x1 * s;
        }
      }
    }
  }
};

template <typename T>
void rms_norm(const Matrix<T>& x, const Matrix<T>& gain, T eps, Matrix<T>& y, Vec<T>& r) {
  const T d = static_cast<T>(x.cols());
  r = ((x.array().square().rowwise().sum() / d) + eps).rsqrt();
  y = (x.array().colwise() * r.array()).rowwise() * gain.row(0).array();
}

// Accumulates dgain and returns dx.
template <typename T>
Matrix<T> rms_norm_backward(const Matrix<T>& x, const Vec<T>& r, const Matrix<T>& gain, const Matrix<T>& dy,
                            Matrix<T>* dgain) {
  const T d = static_cast<T>(x.cols());
  const Matrix<T> gdy = dy.array().rowwise() * gain.row(0).array();
  if (dgain) *dgain += (dy.array() * (x.array().colwise() * r.array())).colwise().sum().matrix();
  const Vec<T> dot = (gdy.array() * x.array()).rowwise().sum();
  const Vec<T> coeff = (r.array().cube() * dot.array()) / d;
  return (gdy.array().colwise() * r.array() - x.array().colwise() * coeff.array()).matrix();
}

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
struct LayerCache {
  Matrix<T> x, a, q, k, v, o, x2, b, g, u, m;
  Vec<T> r1, r2;
  std::vector<Matrix<T>> probs;  // [seq * heads + head], len x len
};

template <typename T>
struct Forward {
  std::vector<LayerCache<T>> layers;
  std::vector<std::array<Matrix<T>, 7>> weff;  // effective projections per layer
  Matrix<T> xf, nf;
  Vec<T> rf;
  Matrix<T> logits;
};

template <typename T>
Matrix<T> effective(const ModelParams<T>& p, int layer, int proj_index) {
  const std::string& proj = projection_names()[proj_index];
  const Matrix<T>& w = p.blocks[layer].projection(proj);
  const auto it = p.adapters.find(fmt::format("blocks.{}.{}", layer, proj));
  if (it == p.adapters.end()) return w;
  const T s = static_cast<T>(p.lora->scale());
  return w + s * (it->second.b * it->second.a);
}

enum Proj { kQ = 0, kK, kV, kO, kGate, kUp, kDown };

template <typename T>
void run_forward(const ModelParams<T>& p, const Batch& batch, const Shape& shape, const Rope<T>& rope,
                 Forward<T>& f) {
  const ModelConfig& cfg = p.config;
  const int d = cfg.dim, heads = cfg.heads, hd = cfg.head_dim(), len = shape.len;
  const T eps = static_cast<T>(cfg.norm_eps);
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd)));

  Matrix<T> x(shape.rows(), d);
  for (int s = 0; s < shape.batch; ++s)
    for (int t = 0; t < len; ++t) x.row(s * len + t) = p.embed.row(batch[s][t]);

  f.layers.resize(cfg.layers);
  f.weff.resize(cfg.layers);
  for (int l = 0; l < cfg.layers; ++l) {
    auto& c = f.layers[l];
    auto& w = f.weff[l];
    const auto& blk = p.blocks[l];
    for (int i = 0; i < 7; ++i) w[i] = effective(p, l, i);

    c.x = std::move(x);
    rms_norm(c.x, blk.attn_norm, eps, c.a, c.r1);
    c.q = c.a * w[kQ].transpose();
    c.k = c.a * w[kK].transpose();
    c.v = c.a * w[kV].transpose();
    rope.apply(c.q, len, heads, hd, false);
    rope.apply(c.k, len, heads, hd, false);

    c.o.resize(shape.rows(), d);
    c.probs.resize(static_cast<std::size_t>(shape.batch) * heads);
    for (int s = 0; s < shape.batch; ++s) {
      for (int h = 0; h < heads; ++h) {
        const auto q = c.q.block(s * len, h * hd, len, hd);
        const auto k = c.k.block(s * len, h * hd, len, hd);
        const auto v = c.v.block(s * len, h * hd, len, hd);
        Matrix<T> sc = (q * k.transpose()) * scale;
        for (int i = 0; i < len; ++i) {
          const T mx = sc.row(i).head(i + 1).maxCoeff();
          T sum = 0;
          for (int j = 0; j <= i; ++j) {
            sc(i, j) = std::exp(sc(i, j) - mx);
            sum += sc(i, j);
          }
          for (int j = 0; j <= i; ++j) sc(i, j) /= sum;
          for (int j = i + 1; j < len; ++j) sc(i, j) = 0;
        }
        c.o.block(s * len, h * hd, len, hd) = sc * v;
        c.probs[s * heads + h] = std::move(sc);
      }
    }
    c.x2 = c.x + c.o * w[kO].transpose();
    rms_norm(c.x2, blk.ffn_norm, eps, c.b, c.r2);
    c.g = c.b * w[kGate].transpose();
    c.u = c.b * w[kUp].transpose();
    c.m = c.g.unaryExpr([](T z) { return z * sigmoid(z); }).cwiseProduct(c.u);
    x = c.x2 + c.m * w[kDown].transpose();
  }
  f.xf = std::move(x);
  rms_norm(f.xf, p.final_norm, eps, f.nf, f.rf);
  f.logits = f.nf * p.head.transpose();
}

// Cross-entropy, accuracy and (optionally) dlogits, which is overwritten in place
// of the logits with softmax - onehot, scaled by 1/predictions.
template <typename T>
void score(Matrix<T>& logits, const Batch& batch, const Shape& shape, bool want_grad, double& loss,
           double& accuracy, std::size_t& predictions) {
  predictions = static_cast<std::size_t>(shape.batch) * (shape.len - 1);
  double loss_sum = 0.0, acc_sum = 0.0;
  const T inv = static_cast<T>(1.0 / static_cast<double>(predictions));
  for (int s = 0; s < shape.batch; ++s) {
    for (int t = 0; t < shape.len; ++t) {
      auto row = logits.row(s * shape.len + t);
      if (t == shape.len - 1) {
        if (want_grad) row.setZero();
        continue;
      }
      const int target = batch[s][t + 1];
      const T mx = row.maxCoeff();
      int ties = 0;
      for (Eigen::Index j = 0; j < row.size(); ++j) ties += row(j) == mx;
      if (row(target) == mx) acc_sum += 1.0 / ties;
      double z = 0.0;
      for (Eigen::Index j = 0; j < row.size(); ++j) z += std::exp(static_cast<double>(row(j) - mx));
      const double log_z = std::log(z) + static_cast<double>(mx);
      loss_sum += log_z - static_cast<double>(row(target));
      if (want_grad) {
        for (Eigen::Index j = 0; j < row.size(); ++j)
          row(j) = static_cast<T>(std::exp(static_cast<double>(row(j)) - log_z)) * inv;
        row(target) -= inv;
      }
    }
  }
  loss = loss_sum / static_cast<double>(predictions);
  accuracy = acc_sum / static_cast<double>(predictions);
}

}  // namespace

template <typename T>
ForwardResult<T> forward_loss(const ModelParams<T>& params, const Batch& batch, bool keep_logits) {
  const Shape shape = check_batch(params.config, batch);
  const Rope<T> rope(params.config, shape.len);
  Forward<T> f;
  run_forward(params, batch, shape, rope, f);
  ForwardResult<T> r;
  if (keep_logits) r.logits = f.logits;
  score(f.logits, batch, shape, false, r.loss, r.accuracy, r.predictions);
  return r;
}

template <typename T>
LossGrad<T> backward(const ModelParams<T>& p, const Batch& batch) {
  const ModelConfig& cfg = p.config;
  const Shape shape = check_batch(cfg, batch);
  const Rope<T> rope(cfg, shape.len);
  Forward<T> f;
  run_forward(p, batch, shape, rope, f);
  LossGrad<T> out;
  std::size_t predictions = 0;
  score(f.logits, batch, shape, true, out.loss, out.accuracy, predictions);
  if (p.trainable.empty()) return out;

  auto want = [&](const std::string& name) { return p.trainable.count(name) > 0; };
  auto grad = [&](const std::string& name) -> Matrix<T>& {
    auto it = out.grads.find(name);
    if (it == out.grads.end()) it = out.grads.emplace(name, Matrix<T>::Zero(p.tensor(name).rows(), p.tensor(name).cols())).first;
    return it->second;
  };

  // Lowest layer whose input gradient is still needed.
  int stop = cfg.layers;
  if (want("embed")) {
    stop = 0;
  } else {
    for (const auto& name : p.trainable) {
      if (name.rfind("blocks.", 0) == 0) stop = std::min(stop, std::stoi(name.substr(7)));
    }
  }

  const Matrix<T>& dlogits = f.logits;
  if (want("head")) grad("head").noalias() += dlogits.transpose() * f.nf;
  if (stop == cfg.layers && !want("final_norm")) {
    // only the head trains
  } else {
    Matrix<T> dn = dlogits * p.head;
    Matrix<T> dx = rms_norm_backward(f.xf, f.rf, p.final_norm, dn, want("final_norm") ? &grad("final_norm") : nullptr);

    const int heads = cfg.heads, hd = cfg.head_dim(), len = shape.len;
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd)));
    for (int l = cfg.layers - 1; l >= stop; --l) {
      const auto& c = f.layers[l];
      const auto& w = f.weff[l];
      const auto& blk = p.blocks[l];
      const std::string prefix = fmt::format("blocks.{}.", l);

      // Routes an effective-weight gradient to W and/or its adapter.
      auto push = [&](int proj, const Matrix<T>& dweff) {
        const std::string name = prefix + projection_names()[proj];
        if (want(name)) grad(name) += dweff;
        const auto it = p.adapters.find(name);
        if (it == p.adapters.end()) return;
        const T s = static_cast<T>(p.lora->scale());
        if (want(name + ".lora_a")) grad(name + ".lora_a").noalias() += s * (it->second.b.transpose() * dweff);
        if (want(name + ".lora_b")) grad(name + ".lora_b").noalias() += s * (dweff * it->second.a.transpose());
      };

      // FFN
      const Matrix<T>& dy = dx;
      push(kDown, dy.transpose() * c.m);
      const Matrix<T> dm = dy * w[kDown];
      Matrix<T> dg(c.g.rows(), c.g.cols()), du(c.u.rows(), c.u.cols());
      for (Eigen::Index i = 0; i < c.g.size(); ++i) {
        const T z = c.g.data()[i], sg = sigmoid(z);
        du.data()[i] = dm.data()[i] * z * sg;
        dg.data()[i] = dm.data()[i] * c.u.data()[i] * sg * (T(1) + z * (T(1) - sg));
      }
      push(kGate, dg.transpose() * c.b);
      push(kUp, du.transpose() * c.b);
      const Matrix<T> db = dg * w[kGate] + du * w[kUp];
      Matrix<T> dx2 = dy + rms_norm_backward(c.x2, c.r2, blk.ffn_norm, db,
                                             want(prefix + "ffn_norm") ? &grad(prefix + "ffn_norm") : nullptr);

      // Attention
      push(kO, dx2.transpose() * c.o);
      const Matrix<T> dout = dx2 * w[kO];
      Matrix<T> dq(c.q.rows(), c.q.cols()), dk(c.k.rows(), c.k.cols()), dv(c.v.rows(), c.v.cols());
      for (int s = 0; s < shape.batch; ++s) {
        for (int h = 0; h < heads; ++h) {
          const Matrix<T>& prob = c.probs[s * heads + h];
          const auto q = c.q.block(s * len, h * hd, len, hd);
          const auto k = c.k.block(s * len, h * hd, len, hd);
          const auto v = c.v.block(s * len, h * hd, len, hd);
          const auto dO = dout.block(s * len, h * hd, len, hd);
          const Matrix<T> dp = dO * v.transpose();
          dv.block(s * len, h * hd, len, hd) = prob.transpose() * dO;
          const Vec<T> rowdot = (dp.array() * prob.array()).rowwise().sum();
          const Matrix<T> ds = (prob.array() * (dp.array().colwise() - rowdot.array())).matrix() * scale;
          dq.block(s * len, h * hd, len, hd) = ds * k;
          dk.block(s * len, h * hd, len, hd) = ds.transpose() * q;
        }
      }
      rope.apply(dq, len, heads, hd, true);
      rope.apply(dk, len, heads, hd, true);
      push(kQ, dq.transpose() * c.a);
      push(kK, dk.transpose() * c.a);
      push(kV, dv.transpose() * c.a);
      if (l == stop && !want("embed") && !want(prefix + "attn_norm")) break;
      const Matrix<T> da = dq * w[kQ] + dk * w[kK] + dv * w[kV];
      dx = dx2 + rms_norm_backward(c.x, c.r1, blk.attn_norm, da,
                                   want(prefix + "attn_norm") ? &grad(prefix + "attn_norm") : nullptr);
    }
    if (want("embed")) {
      Matrix<T>& ge = grad("embed");
      for (int s = 0; s < shape.batch; ++s)
        for (int t = 0; t < len; ++t) ge.row(batch[s][t]) += dx.row(s * len + t);
    }
  }

  // Make sure every trainable tensor has an entry, even if untouched.
  for (const auto& name : p.trainable) grad(name);
  if (p.new_rows_only) {
    const auto keep = static_cast<Eigen::Index>(p.partition.base_rows);
    for (const char* name : {"embed", "head"}) {
      auto it = out.grads.find(name);
      if (it != out.grads.end()) it->second.topRows(keep).setZero();
    }
  }
  return out;
}

template ForwardResult<float> forward_loss<float>(const ModelParams<float>&, const Batch&, bool);
template ForwardResult<double> forward_loss<double>(const ModelParams<double>&, const Batch&, bool);
template LossGrad<float> backward<float>(const ModelParams<float>&, const Batch&);
template LossGrad<double> backward<double>(const ModelParams<double>&, const Batch&);

}  // namespace langadapt::train
