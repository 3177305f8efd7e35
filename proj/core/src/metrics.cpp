// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include "gscodec/metrics.hpp"

#include "gscodec/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace gscodec {

namespace {

constexpr int kWindow = 11;
constexpr int kRadius = kWindow / 2;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, kWindow>& gaussian_window() {
    static const std::array<double, kWindow> window = [] {
        std::array<double, kWindow> w{};
        double sum = 0.0;
        for (int i = 0; i < kWindow; ++i) {
            const double d = i - kRadius;
            w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
            sum += w[static_cast<std::size_t>(i)];
        }
        for (auto& v : w) v /= sum;
        return w;
    }();
    return window;
}

// Separable 11x11 Gaussian filter with zero padding. Self-adjoint.
void blur(const std::vector<double>& in, std::vector<double>& out, int width, int height) {
    const auto& w = gaussian_window();
    std::vector<double> tmp(in.size(), 0.0);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double s = 0.0;
            const int lo = std::max(0, x - kRadius), hi = std::min(width - 1, x + kRadius);
            for (int k = lo; k <= hi; ++k) s += w[static_cast<std::size_t>(k - x + kRadius)] * in[static_cast<std::size_t>(y * width + k)];
            tmp[static_cast<std::size_t>(y * width + x)] = s;
        }
    }
    out.assign(in.size(), 0.0);
    for (int y = 0; y < height; ++y) {
        const int lo = std::max(0, y - kRadius), hi = std::min(height - 1, y + kRadius);
        for (int k = lo; k <= hi; ++k) {
            const double wk = w[static_cast<std::size_t>(k - y + kRadius)];
            const double* src = tmp.data() + static_cast<std::size_t>(k * width);
            double* dst = out.data() + static_cast<std::size_t>(y * width);
            for (int x = 0; x < width; ++x) dst[x] += wk * src[x];
        }
    }
}

void check_shapes(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw Error("image sizes differ");
    if (a.data.empty()) throw Error("empty image");
}

double ssim_impl(const Image& a, const Image& b, Image* grad) {
    check_shapes(a, b);
    const int w = a.width, h = a.height;
    const std::size_t plane = a.pixel_count();
    const double norm = 1.0 / static_cast<double>(plane * 3);
    if (grad) *grad = Image(w, h);

    std::vector<double> pa(plane), pb(plane), paa(plane), pbb(plane), pab(plane);
    std::vector<double> mu_a, mu_b, e_aa, e_bb, e_ab;
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < plane; ++i) {
            pa[i] = a.data[i * 3 + static_cast<std::size_t>(c)];
            pb[i] = b.data[i * 3 + static_cast<std::size_t>(c)];
            paa[i] = pa[i] * pa[i];
            pbb[i] = pb[i] * pb[i];
            pab[i] = pa[i] * pb[i];
        }
        blur(pa, mu_a, w, h);
        blur(pb, mu_b, w, h);
        blur(paa, e_aa, w, h);
        blur(pbb, e_bb, w, h);
        blur(pab, e_ab, w, h);

        std::vector<double> d_mu, d_var, d_cov;
        if (grad) {
            d_mu.resize(plane);
            d_var.resize(plane);
            d_cov.resize(plane);
        }
        for (std::size_t i = 0; i < plane; ++i) {
            const double ma = mu_a[i], mb = mu_b[i];
            const double va = e_aa[i] - ma * ma, vb = e_bb[i] - mb * mb, cov = e_ab[i] - ma * mb;
            const double n1 = 2.0 * ma * mb + kC1, n2 = 2.0 * cov + kC2;
            const double d1 = ma * ma + mb * mb + kC1, d2 = va + vb + kC2;
            const double s = n1 * n2 / (d1 * d2);
            total += s;
            if (grad) {
                const double ds_dmu = 2.0 * mb * n2 / (d1 * d2) - s * 2.0 * ma / d1;
                const double ds_dvar = -s / d2;
                const double ds_dcov = 2.0 * n1 / (d1 * d2);
                // var_a = E[a^2] - mu_a^2 and cov = E[ab] - mu_a mu_b fold into the mean term.
                d_mu[i] = norm * (ds_dmu - 2.0 * ds_dvar * ma - ds_dcov * mb);
                d_var[i] = norm * ds_dvar;
                d_cov[i] = norm * ds_dcov;
            }
        }
        if (grad) {
            std::vector<double> g_mu, g_var, g_cov;
            blur(d_mu, g_mu, w, h);
            blur(d_var, g_var, w, h);
            blur(d_cov, g_cov, w, h);
            for (std::size_t i = 0; i < plane; ++i)
                grad->data[i * 3 + static_cast<std::size_t>(c)] = g_mu[i] + 2.0 * pa[i] * g_var[i] + pb[i] * g_cov[i];
        }
    }
    return total * norm;
}

}  // namespace

double mean_absolute_error(const Image& a, const Image& b) {
    check_shapes(a, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) sum += std::abs(a.data[i] - b.data[i]);
    return sum / static_cast<double>(a.data.size());
}

double mean_squared_error(const Image& a, const Image& b) {
    check_shapes(a, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        sum += d * d;
    }
    return sum / static_cast<double>(a.data.size());
}

double psnr(const Image& a, const Image& b) {
    const double mse = mean_squared_error(a, b);
    if (mse <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

double ssim(const Image& a, const Image& b) { return ssim_impl(a, b, nullptr); }

double ssim_with_gradient(const Image& a, const Image& b, Image& grad_a) { return ssim_impl(a, b, &grad_a); }

LossResult render_loss(const Image& image, const Image& reference, double lambda) {
    check_shapes(image, reference);
    LossResult result;
    Image ssim_grad;
    result.ssim = ssim_with_gradient(image, reference, ssim_grad);
    result.l1 = mean_absolute_error(image, reference);
    result.value = (1.0 - lambda) * result.l1 + lambda * (1.0 - result.ssim);

    const double norm = 1.0 / static_cast<double>(image.data.size());
    result.gradient = Image(image.width, image.height);
    for (std::size_t i = 0; i < image.data.size(); ++i) {
        const double d = image.data[i] - reference.data[i];
        const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        result.gradient.data[i] = (1.0 - lambda) * sign * norm - lambda * ssim_grad.data[i];
    }
    return result;
}

}  // namespace gscodec
