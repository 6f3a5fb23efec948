// SPDX-License-Identifier: Apache-2.0
#include "langadapt/train/optimizer.hpp"

#include <cmath>

namespace langadapt::train {
namespace {

bool is_norm(const std::string& name) { return name.size() >= 4 && name.compare(name.size() - 4, 4, "norm") == 0; }

}  // namespace

template <typename T>
double AdamW<T>::step(ModelParams<T>& params, const Gradients<T>& grads, double lr) {
  double sq = 0.0;
  for (const auto& [name, g] : grads) sq += g.template cast<double>().squaredNorm();
  const double norm = std::sqrt(sq);
  const double clip = (cfg_.max_grad_norm > 0.0 && norm > cfg_.max_grad_norm) ? cfg_.max_grad_norm / norm : 1.0;

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
  for (const auto& [name, g] : grads) {
    Matrix<T>& w = params.tensor(name);
    auto& st = state_[name];
    if (st.m.size() == 0) {
      st.m = Matrix<T>::Zero(w.rows(), w.cols());
      st.v = Matrix<T>::Zero(w.rows(), w.cols());
    }
    Eigen::Index first = 0;
    if (params.new_rows_only && (name == "embed" || name == "head")) {
      first = static_cast<Eigen::Index>(params.partition.base_rows);
    }
    const T decay = is_norm(name) ? T(0) : static_cast<T>(lr * cfg_.weight_decay);
    const T step_size = static_cast<T>(lr / bc1);
    const T inv_bc2 = static_cast<T>(1.0 / bc2);
    const T eps = static_cast<T>(cfg_.eps);
    const T c = static_cast<T>(clip);
    for (Eigen::Index r = first; r < w.rows(); ++r) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        const T gij = g(r, j) * c;
        T& m = st.m(r, j);
        T& v = st.v(r, j);
        m = b1 * m + (T(1) - b1) * gij;
        v = b2 * v + (T(1) - b2) * gij * gij;
        if (lr == 0.0) continue;
        w(r, j) -= decay * w(r, j);
        w(r, j) -= step_size * m / (std::sqrt(v * inv_bc2) + eps);
      }
    }
  }
  return norm;
}

template class AdamW<float>;
template class AdamW<double>;

}  // namespace langadapt::train
