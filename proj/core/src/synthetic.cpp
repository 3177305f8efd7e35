// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include "gscodec/synthetic.hpp"

#include "gscodec/error.hpp"
#include "gscodec/sh.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace gscodec {

namespace {

Vec3 point_in_ball(std::mt19937_64& rng, double radius) {
    std::uniform_real_distribution<double> u(-radius, radius);
    for (;;) {
        const Vec3 p(u(rng), u(rng), u(rng));
        if (p.norm() <= radius) return p;
    }
}

Vec4 random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    for (;;) {
        const Vec4 q(n(rng), n(rng), n(rng), n(rng));
        if (q.norm() > 1e-6) return canonical_quaternion(q);
    }
}

std::vector<CameraPose> ring_cameras(int views, int width, int height, double radius, double focal_factor) {
    std::vector<CameraPose> cameras;
    for (int v = 0; v < views; ++v) {
        const double angle = 2.0 * std::numbers::pi * v / views;
        const double lift = (v % 2 == 0) ? 0.6 : -0.4;
        const Vec3 eye(radius * std::cos(angle), lift, radius * std::sin(angle));
        cameras.push_back(CameraPose::look_at(eye, Vec3::Zero(), Vec3(0, 1, 0), focal_factor * width, width, height));
    }
    return cameras;
}

}  // namespace

SyntheticScene make_toy_scene(const ToySceneOptions& options) {
    if (options.scale_prototypes < 1 || options.rotation_prototypes < 1 || options.views < 1)
        throw Error("toy scene needs at least one prototype and one view");
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<Vec3> scale_protos;
    for (int i = 0; i < options.scale_prototypes; ++i) {
        Vec3 s;
        for (int a = 0; a < 3; ++a) s[a] = std::exp(std::log(0.012) + unit(rng) * (std::log(0.045) - std::log(0.012)));
        scale_protos.push_back(s);
    }
    std::vector<Vec4> rotation_protos;
    for (int i = 0; i < options.rotation_prototypes; ++i) rotation_protos.push_back(random_rotation(rng));

    Vec3 phase, freq;
    for (int c = 0; c < 3; ++c) {
        phase[c] = 2.0 * std::numbers::pi * unit(rng);
        freq[c] = 2.0 + 2.0 * unit(rng);
    }

    SyntheticScene scene;
    GaussianCloud& cloud = scene.cloud;
    cloud.sh_degree = 3;
    const std::size_t total = options.count + options.hidden;
    cloud.resize(total);
    std::uniform_int_distribution<int> pick_scale(0, options.scale_prototypes - 1);
    std::uniform_int_distribution<int> pick_rot(0, options.rotation_prototypes - 1);
    for (std::size_t i = 0; i < total; ++i) {
        const bool hidden = i >= options.count;
        const Vec3 p = point_in_ball(rng, 0.8);
        cloud.positions[i] = p;
        cloud.scales[i] = hidden ? Vec3::Constant(1e-3) : scale_protos[pick_scale(rng)];
        cloud.rotations[i] = rotation_protos[pick_rot(rng)];
        cloud.opacities[i] = hidden ? 0.0 : 0.35 + 0.6 * unit(rng);
        auto sh = cloud.sh_of(i);
        for (int c = 0; c < 3; ++c) {
            const double rgb = 0.5 + 0.35 * std::sin(freq[c] * (p[0] + 0.7 * p[1] - 0.4 * p[2]) + phase[c]);
            sh[c * 16 + 0] = rgb_to_sh_dc(rgb);
            for (int b = 1; b < 4; ++b) sh[c * 16 + b] = 0.08 * std::cos(3.0 * p[b - 1] + phase[c]);
            for (int b = 4; b < 16; ++b) sh[c * 16 + b] = 0.02 * std::cos(2.0 * p[b % 3] + b + phase[c]);
        }
    }
    scene.cameras = ring_cameras(options.views, options.width, options.height, 2.6, 1.1);
    return scene;
}

SyntheticScene make_decoy_scene(std::size_t contributors, std::size_t decoys, int views, int width, int height,
                                std::uint64_t seed) {
    if (views < 1) throw Error("decoy scene needs at least one view");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    SyntheticScene scene;
    GaussianCloud& cloud = scene.cloud;
    cloud.sh_degree = 0;
    cloud.resize(contributors + decoys);

    // Contributors sit on a jittered grid in the z = 0 plane, spaced so their
    // footprints do not overlap in any of the front-facing views.
    const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(std::max<std::size_t>(1, contributors)))));
    const double spacing = 1.8 / static_cast<double>(side > 1 ? side - 1 : 1);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const bool decoy = i >= contributors;
        if (decoy) {
            cloud.positions[i] = Vec3(-1.0 + 2.0 * unit(rng), -1.0 + 2.0 * unit(rng), -0.3 + 0.6 * unit(rng));
        } else {
            const double gx = -0.9 + spacing * static_cast<double>(i % side);
            const double gy = -0.9 + spacing * static_cast<double>(i / side);
            cloud.positions[i] = Vec3(gx + 0.02 * (unit(rng) - 0.5), gy + 0.02 * (unit(rng) - 0.5), 0.1 * (unit(rng) - 0.5));
        }
        for (int a = 0; a < 3; ++a) cloud.scales[i][a] = 0.02 + 0.01 * unit(rng);
        cloud.rotations[i] = random_rotation(rng);
        cloud.opacities[i] = decoy ? 0.0 : 0.6 + 0.35 * unit(rng);
        auto sh = cloud.sh_of(i);
        for (int c = 0; c < 3; ++c) sh[c] = rgb_to_sh_dc(0.1 + 0.8 * unit(rng));
    }

    const double tilt = 15.0 * std::numbers::pi / 180.0;
    for (int v = 0; v < views; ++v) {
        const double phi = 2.0 * std::numbers::pi * v / views;
        const Vec3 eye(2.6 * std::sin(tilt) * std::cos(phi), 2.6 * std::sin(tilt) * std::sin(phi), -2.6 * std::cos(tilt));
        scene.cameras.push_back(CameraPose::look_at(eye, Vec3::Zero(), Vec3(0, 1, 0), 1.0 * width, width, height));
    }
    return scene;
}

FieldConfig toy_field_config() {
    FieldConfig c;
    c.num_levels = 8;
    c.features_per_level = 2;
    c.base_resolution = 4;
    c.max_resolution = 64;
    c.max_hashmap = 1u << 8;
    c.mlp_hidden = 64;
    c.mlp_layers = 2;
    return c;
}

}  // namespace gscodec
