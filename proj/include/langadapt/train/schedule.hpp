// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace langadapt::train {

/// Warmup length: ceil(warmup_ratio * max_steps).
std::int64_t warmup_steps(std::int64_t max_steps, double warmup_ratio);

/// Linear warmup 0 -> peak over warmup_steps, then cosine decay to exactly 0
/// at max_steps. Steps outside [0, max_steps] clamp.
double cosine_lr(std::int64_t step, std::int64_t max_steps, double warmup_ratio, double peak);

}  // namespace langadapt::train
