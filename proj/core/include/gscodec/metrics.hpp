// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gscodec/image.hpp"

namespace gscodec {

/// Reported in place of +inf for identical images.
inline constexpr double kPsnrCap = 99.0;

double mean_absolute_error(const Image& a, const Image& b);
double mean_squared_error(const Image& a, const Image& b);

/// PSNR for a peak of 1.0, capped at kPsnrCap.
double psnr(const Image& a, const Image& b);

/// Mean SSIM over all pixels and channels: 11x11 Gaussian window (sigma 1.5),
/// zero padding, C1 = 0.01^2, C2 = 0.03^2.
double ssim(const Image& a, const Image& b);

/// SSIM and its gradient with respect to `a`.
double ssim_with_gradient(const Image& a, const Image& b, Image& grad_a);

struct LossResult {
    double value = 0.0;
    double l1 = 0.0;
    double ssim = 1.0;
    Image gradient;
};

/// (1 - lambda) * L1 + lambda * (1 - SSIM), with its gradient w.r.t. `image`.
LossResult render_loss(const Image& image, const Image& reference, double lambda = 0.2);

}  // namespace gscodec
