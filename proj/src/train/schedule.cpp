// SPDX-License-Identifier: Apache-2.0
#include "langadapt/train/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace langadapt::train {

std::int64_t warmup_steps(std::int64_t max_steps, double warmup_ratio) {
  // The epsilon keeps e.g. 0.03 * 100 (= 3.0000000000000004) at 3.
  return static_cast<std::int64_t>(std::ceil(warmup_ratio * static_cast<double>(max_steps) - 1e-9));
}

double cosine_lr(std::int64_t step, std::int64_t max_steps, double warmup_ratio, double peak) {
  if (max_steps <= 0 || step >= max_steps) return 0.0;
  step = std::max<std::int64_t>(step, 0);
  // With no warmup, step 0 is the warmup end and gets the peak.
  const std::int64_t warm = warmup_steps(max_steps, warmup_ratio);
  if (step < warm) return peak * static_cast<double>(step) / static_cast<double>(warm);
  if (step == warm) return peak;
  const double progress = static_cast<double>(step - warm) / static_cast<double>(max_steps - warm);
  return 0.5 * peak * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace langadapt::train
