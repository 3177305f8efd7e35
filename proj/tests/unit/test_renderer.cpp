// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include <gscodec/error.hpp>
#include <gscodec/renderer.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace {

using namespace gscodec;

CameraPose front_camera(int size = 33, double focal = 40.0) {
    return CameraPose::look_at(Vec3(0, 0, -3), Vec3::Zero(), Vec3(0, 1, 0), focal, size, size);
}

struct Scene {
    std::vector<Vec3> positions, scales, colors;
    std::vector<Vec4> rotations;
    std::vector<double> opacities;

    void add(const Vec3& p, double s, double o, const Vec3& c) {
        positions.push_back(p);
        scales.push_back(Vec3::Constant(s));
        rotations.push_back(Vec4(1, 0, 0, 0));
        opacities.push_back(o);
        colors.push_back(c);
    }
    SplatView view() const { return {positions, rotations, scales, opacities, colors, {}}; }
};

Scene random_scene(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Scene s;
    for (std::size_t i = 0; i < n; ++i) {
        s.positions.push_back(Vec3(0.8 * (u(rng) - 0.5), 0.8 * (u(rng) - 0.5), 0.6 * (u(rng) - 0.5)));
        s.scales.push_back(Vec3(0.04 + 0.06 * u(rng), 0.04 + 0.06 * u(rng), 0.04 + 0.06 * u(rng)));
        s.rotations.push_back(canonical_quaternion(Vec4(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5)));
        s.opacities.push_back(0.1 + 0.4 * u(rng));
        s.colors.push_back(Vec3(u(rng), u(rng), u(rng)));
    }
    return s;
}

double weighted_sum(const Image& img, const Image& w) {
    double sum = 0.0;
    for (std::size_t i = 0; i < img.data.size(); ++i) sum += img.data[i] * w.data[i];
    return sum;
}

Image random_weights(int size, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Image w(size, size);
    for (double& v : w.data) v = u(rng);
    return w;
}

TEST(Renderer, SingleGaussianMatchesClosedForm) {
    Scene s;
    s.add(Vec3::Zero(), 0.05, 0.5, Vec3(0.2, 0.4, 0.6));
    const RenderSettings settings;
    const Image img = rasterize(s.view(), front_camera(), settings);
    const double var = std::pow(40.0 * 0.05 / 3.0, 2) + settings.lowpass;
    for (int dx : {0, 1, 2}) {
        const double alpha = 0.5 * std::exp(-0.5 * dx * dx / var);
        EXPECT_NEAR(img.pixel(16 + dx, 16)[0], 0.2 * alpha, 1e-12);
        EXPECT_NEAR(img.pixel(16, 16 + dx)[2], 0.6 * alpha, 1e-12);
    }
    EXPECT_EQ(img.pixel(0, 0)[0], 0.0);
}

TEST(Renderer, BlendsFrontToBack) {
    Scene s;
    s.add(Vec3::Zero(), 0.05, 0.6, Vec3(0, 0, 1));       // depth 3
    s.add(Vec3(0, 0, -1), 0.05, 0.5, Vec3(1, 0, 0));     // depth 2, in front
    RenderSettings settings;
    settings.background = Vec3(0, 1, 0);
    const Image img = rasterize(s.view(), front_camera(), settings);
    const double* c = img.pixel(16, 16);
    EXPECT_NEAR(c[0], 0.5, 1e-12);
    EXPECT_NEAR(c[2], 0.6 * 0.5, 1e-12);
    EXPECT_NEAR(c[1], 0.5 * 0.4, 1e-12);  // background through both
}

TEST(Renderer, ClampsAlpha) {
    Scene s;
    s.add(Vec3::Zero(), 0.05, 1.0, Vec3(1, 1, 1));
    const Image img = rasterize(s.view(), front_camera(), RenderSettings{});
    EXPECT_NEAR(img.pixel(16, 16)[0], 0.99, 1e-12);
}

TEST(Renderer, CullsBehindCameraAndOffscreen) {
    Scene s;
    s.add(Vec3(0, 0, -5), 0.05, 0.5, Vec3(1, 1, 1));
    s.add(Vec3(50, 0, 0), 0.05, 0.5, Vec3(1, 1, 1));
    RenderStats stats;
    const Image img = rasterize(s.view(), front_camera(), RenderSettings{}, nullptr, &stats);
    EXPECT_EQ(stats.culled, 2u);
    for (double v : img.data) EXPECT_EQ(v, 0.0);
}

TEST(Renderer, ZeroOpacityGaussiansChangeNothing) {
    Scene s = random_scene(30, 1);
    const Image before = rasterize(s.view(), front_camera(), RenderSettings{});
    Scene t = s;
    for (int i = 0; i < 10; ++i) t.add(Vec3(0.01 * i, 0, 0), 0.1, 0.0, Vec3(1, 0, 1));
    const Image after = rasterize(t.view(), front_camera(), RenderSettings{});
    EXPECT_EQ(before.data, after.data);
}

TEST(Renderer, IsDeterministic) {
    const Scene s = random_scene(60, 2);
    EXPECT_EQ(rasterize(s.view(), front_camera(), {}).data, rasterize(s.view(), front_camera(), {}).data);
}

TEST(Renderer, OpacityAndColorGradientsMatchFiniteDifferences) {
    Scene s = random_scene(12, 3);
    const CameraPose pose = front_camera();
    const Image w = random_weights(33, 4);
    RenderTape tape;
    rasterize(s.view(), pose, {}, &tape);
    const SplatGradients g = backward(w, s.view(), tape);
    const double h = 1e-6;
    for (std::size_t i = 0; i < s.positions.size(); ++i) {
        const double keep = s.opacities[i];
        s.opacities[i] = keep + h;
        const double up = weighted_sum(rasterize(s.view(), pose, {}), w);
        s.opacities[i] = keep - h;
        const double down = weighted_sum(rasterize(s.view(), pose, {}), w);
        s.opacities[i] = keep;
        EXPECT_NEAR(g.opacity[i], (up - down) / (2 * h), 1e-5) << i;
        for (int c = 0; c < 3; ++c) {
            const double kc = s.colors[i][c];
            s.colors[i][c] = kc + h;
            const double cu = weighted_sum(rasterize(s.view(), pose, {}), w);
            s.colors[i][c] = kc - h;
            const double cd = weighted_sum(rasterize(s.view(), pose, {}), w);
            s.colors[i][c] = kc;
            EXPECT_NEAR(g.color[i][c], (cu - cd) / (2 * h), 1e-5) << i;
        }
    }
}

TEST(Renderer, CovarianceGradientMatchesFiniteDifferences) {
    Scene s = random_scene(10, 5);
    const CameraPose pose = front_camera();
    const RenderSettings settings;
    const Image w = random_weights(33, 6);
    RenderTape tape;
    rasterize(s.view(), pose, settings, &tape);
    const SplatGradients g = backward(w, s.view(), tape);
    const double h = 1e-6;
    for (std::size_t i = 0; i < s.positions.size(); ++i) {
        for (int a = 0; a < 3; ++a) {
            const Vec3 keep = s.scales[i];
            s.scales[i][a] = keep[a] + h;
            const double up = weighted_sum(rasterize(s.view(), pose, settings), w);
            const Mat2 cov_up = *projected_covariance(s.positions[i], covariance_from(s.scales[i], s.rotations[i]), pose, settings);
            s.scales[i][a] = keep[a] - h;
            const double down = weighted_sum(rasterize(s.view(), pose, settings), w);
            const Mat2 cov_down = *projected_covariance(s.positions[i], covariance_from(s.scales[i], s.rotations[i]), pose, settings);
            s.scales[i] = keep;
            const Mat2 dcov = (cov_up - cov_down) / (2 * h);
            const double chain = (g.cov2d[i].array() * dcov.array()).sum();
            EXPECT_NEAR(chain, (up - down) / (2 * h), 1e-4 + 1e-4 * std::abs(chain)) << i << "," << a;
        }
    }
}

TEST(Renderer, RecordsMaskedGaussiansForBackward) {
    Scene s;
    s.add(Vec3::Zero(), 0.05, 0.0, Vec3(0.3, 0.5, 0.7));
    const std::vector<double> unmasked{0.8};
    SplatView view = s.view();
    view.record_opacities = unmasked;
    const CameraPose pose = front_camera();
    const RenderSettings settings;
    const Image w = random_weights(33, 7);
    RenderTape tape;
    const Image img = rasterize(view, pose, settings, &tape);
    for (double v : img.data) EXPECT_EQ(v, 0.0);
    const SplatGradients g = backward(w, view, tape);

    // On a black background the derivative at zero opacity is sum w . c G
    // over the pixels the unmasked Gaussian would reach.
    const Projection p = *project_gaussian(s.positions[0], s.scales[0], s.rotations[0], pose, settings);
    double expected = 0.0;
    for (int y = 0; y < 33; ++y) {
        for (int x = 0; x < 33; ++x) {
            const Vec2 d(x - p.mean.x(), y - p.mean.y());
            const double G = std::exp(-0.5 * d.dot(p.conic * d));
            if (x < p.x0 || x > p.x1 || y < p.y0 || y > p.y1 || 0.8 * G < settings.alpha_cutoff) continue;
            const double* wp = w.pixel(x, y);
            expected += (wp[0] * 0.3 + wp[1] * 0.5 + wp[2] * 0.7) * G;
        }
    }
    EXPECT_NEAR(g.opacity[0], expected, 1e-12);
    EXPECT_NE(g.opacity[0], 0.0);
}

TEST(Renderer, RejectsMismatchedArrays) {
    Scene s = random_scene(3, 8);
    s.opacities.pop_back();
    EXPECT_THROW(rasterize(s.view(), front_camera(), {}), Error);
}

}  // namespace
