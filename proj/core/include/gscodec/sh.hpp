// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gscodec/gaussian_cloud.hpp"

#include <span>

namespace gscodec {

inline constexpr double kShC0 = 0.28209479177387814;

/// Real SH color for one Gaussian: clamp(0.5 + sum_b Y_b(d) k_b, 0, 1).
///
/// `coeffs` holds 3 x bases values laid out [channel][basis]; bases must be
/// 1, 4, 9 or 16. A non-unit direction is normalized first.
Vec3 evaluate_sh(std::span<const double> coeffs, int bases, const Vec3& direction);

/// Same as evaluate_sh but without the clamp; exposes the raw sum + 0.5.
Vec3 evaluate_sh_unclamped(std::span<const double> coeffs, int bases, const Vec3& direction);

/// Degree-0 coefficient that evaluates to `rgb` before clamping.
inline double rgb_to_sh_dc(double rgb) { return (rgb - 0.5) / kShC0; }

}  // namespace gscodec
