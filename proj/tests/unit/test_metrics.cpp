// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include <gscodec/metrics.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace {

using namespace gscodec;

Image random_image(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    Image img(w, h);
    for (double& v : img.data) v = u(rng);
    return img;
}

TEST(Metrics, PsnrOfConstantOffset) {
    const Image a(8, 6, 0.3);
    for (double offset : {0.1, 0.01, 0.25}) {
        const Image b(8, 6, 0.3 + offset);
        EXPECT_NEAR(psnr(a, b), 20.0 * std::log10(1.0 / offset), 1e-9);
    }
}

TEST(Metrics, IdenticalImagesHitTheCap) {
    const Image a = random_image(12, 9, 1);
    EXPECT_EQ(psnr(a, a), kPsnrCap);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
    EXPECT_EQ(mean_absolute_error(a, a), 0.0);
}

// Direct per-pixel SSIM: 11x11 Gaussian window (sigma 1.5), zero padding.
double ssim_reference(const Image& a, const Image& b) {
    double w[11], total = 0.0;
    for (int i = 0; i < 11; ++i) total += (w[i] = std::exp(-(i - 5) * (i - 5) / (2 * 1.5 * 1.5)));
    for (double& v : w) v /= total;
    const double c1 = 1e-4, c2 = 9e-4;
    double sum = 0.0;
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < a.height; ++y) {
            for (int x = 0; x < a.width; ++x) {
                double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
                for (int dy = -5; dy <= 5; ++dy) {
                    for (int dx = -5; dx <= 5; ++dx) {
                        const int xx = x + dx, yy = y + dy;
                        if (xx < 0 || yy < 0 || xx >= a.width || yy >= a.height) continue;
                        const double k = w[dx + 5] * w[dy + 5];
                        const double va = a.pixel(xx, yy)[c], vb = b.pixel(xx, yy)[c];
                        ma += k * va;
                        mb += k * vb;
                        saa += k * va * va;
                        sbb += k * vb * vb;
                        sab += k * va * vb;
                    }
                }
                const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
                sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            }
        }
    }
    return sum / static_cast<double>(a.data.size());
}

TEST(Metrics, SsimMatchesDirectWindowedSum) {
    const Image a = random_image(23, 17, 8), b = random_image(23, 17, 9);
    EXPECT_NEAR(ssim(a, b), ssim_reference(a, b), 1e-10);
    const Image c(20, 20, 0.4), d(20, 20, 0.6);
    EXPECT_NEAR(ssim(c, d), ssim_reference(c, d), 1e-10);
}

TEST(Metrics, SsimGradientMatchesFiniteDifferences) {
    Image a = random_image(14, 11, 2);
    const Image b = random_image(14, 11, 3);
    Image grad;
    ssim_with_gradient(a, b, grad);
    std::mt19937 rng(4);
    std::uniform_int_distribution<std::size_t> pick(0, a.data.size() - 1);
    for (int k = 0; k < 25; ++k) {
        const std::size_t i = pick(rng);
        const double h = 1e-6, keep = a.data[i];
        a.data[i] = keep + h;
        const double up = ssim(a, b);
        a.data[i] = keep - h;
        const double down = ssim(a, b);
        a.data[i] = keep;
        EXPECT_NEAR(grad.data[i], (up - down) / (2 * h), 1e-6 + 1e-4 * std::abs(grad.data[i]));
    }
}

TEST(Metrics, RenderLossMixesL1AndSsim) {
    Image a = random_image(10, 10, 5);
    const Image b = random_image(10, 10, 6);
    const LossResult loss = render_loss(a, b, 0.2);
    EXPECT_NEAR(loss.value, 0.8 * mean_absolute_error(a, b) + 0.2 * (1.0 - ssim(a, b)), 1e-12);
    std::mt19937 rng(7);
    std::uniform_int_distribution<std::size_t> pick(0, a.data.size() - 1);
    for (int k = 0; k < 20; ++k) {
        const std::size_t i = pick(rng);
        const double h = 1e-7, keep = a.data[i];
        a.data[i] = keep + h;
        const double up = render_loss(a, b, 0.2).value;
        a.data[i] = keep - h;
        const double down = render_loss(a, b, 0.2).value;
        a.data[i] = keep;
        EXPECT_NEAR(loss.gradient.data[i], (up - down) / (2 * h), 1e-6);
    }
}

}  // namespace
