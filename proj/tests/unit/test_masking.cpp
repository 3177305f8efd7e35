// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include <gscodec/error.hpp>
#include <gscodec/masking.hpp>
#include <gscodec/metrics.hpp>
#include <gscodec/pipeline.hpp>
#include <gscodec/sh.hpp>
#include <gscodec/synthetic.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

namespace {

using namespace gscodec;

GaussianCloud random_cloud(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GaussianCloud c;
    c.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        c.positions[i] = Vec3(0.8 * (u(rng) - 0.5), 0.8 * (u(rng) - 0.5), 0.6 * (u(rng) - 0.5));
        c.scales[i] = Vec3(0.04 + 0.06 * u(rng), 0.04 + 0.06 * u(rng), 0.04 + 0.06 * u(rng));
        c.rotations[i] = canonical_quaternion(Vec4(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5));
        c.opacities[i] = 0.1 + 0.4 * u(rng);
        for (double& v : c.sh_of(i)) v = rgb_to_sh_dc(u(rng));
    }
    return c;
}

CameraPose front_camera() {
    return CameraPose::look_at(Vec3(0.3, 0.2, -3), Vec3::Zero(), Vec3(0, 1, 0), 40.0, 33, 33);
}

double weighted_sum(const Image& img, const Image& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < img.data.size(); ++i) s += img.data[i] * w.data[i];
    return s;
}

TEST(Masking, BinaryMaskThresholdsTheSigmoid) {
    MaskState s;
    s.epsilon = 0.01;
    s.logits = {logit(0.011), logit(0.009), 5.0, -5.0};
    EXPECT_EQ(binary_mask(s), (std::vector<double>{1.0, 0.0, 1.0, 0.0}));
    const auto soft = soft_mask(s);
    const auto grad = binary_mask_gradient(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_NEAR(soft[i], 1.0 / (1.0 + std::exp(-s.logits[i])), 1e-15);
        EXPECT_NEAR(grad[i], soft[i] * (1.0 - soft[i]), 1e-15);
    }
}

TEST(Masking, LossIsMeanSigmoidWithMatchingGradient) {
    MaskState s;
    s.logits = {-1.0, 0.0, 2.0, 3.5};
    double mean = 0.0;
    for (double m : s.logits) mean += 1.0 / (1.0 + std::exp(-m)) / 4.0;
    EXPECT_NEAR(masking_loss(s), mean, 1e-15);
    const auto g = masking_loss_gradient(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
        MaskState up = s, down = s;
        up.logits[i] += 1e-6;
        down.logits[i] -= 1e-6;
        EXPECT_NEAR(g[i], (masking_loss(up) - masking_loss(down)) / 2e-6, 1e-9);
    }
    EXPECT_THROW(masking_loss(MaskState{}), Error);
}

TEST(Masking, InitializedStateStartsNearOne) {
    const MaskState s = MaskState::initialized(3, 0.99, 0.01, MaskMode::scale_only);
    EXPECT_NEAR(soft_mask(s)[0], 0.99, 1e-12);
    EXPECT_EQ(s.mode, MaskMode::scale_only);
    EXPECT_THROW(MaskState::initialized(3, 1.5), Error);
}

TEST(Masking, ModesParseAndPrint) {
    for (MaskMode m : {MaskMode::both, MaskMode::opacity_only, MaskMode::scale_only})
        EXPECT_EQ(parse_mask_mode(to_string(m)), m);
    EXPECT_THROW(parse_mask_mode("sometimes"), Error);
}

TEST(Masking, ApplyMaskScalesTheSelectedAttributes) {
    const GaussianCloud c = random_cloud(3, 1);
    const std::vector<double> m{1.0, 0.0, 0.5};
    const auto both = apply_mask(c, m, MaskMode::both);
    const auto op = apply_mask(c, m, MaskMode::opacity_only);
    const auto sc = apply_mask(c, m, MaskMode::scale_only);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_DOUBLE_EQ(both.opacities[i], m[i] * c.opacities[i]);
        EXPECT_TRUE(both.scales[i].isApprox(m[i] * c.scales[i]) || m[i] == 0.0);
        EXPECT_DOUBLE_EQ(op.opacities[i], m[i] * c.opacities[i]);
        EXPECT_EQ(op.scales[i], c.scales[i]);
        EXPECT_DOUBLE_EQ(sc.opacities[i], c.opacities[i]);
    }
    EXPECT_EQ(both.scales[1], Vec3::Zero());
}

class MaskGradient : public ::testing::TestWithParam<MaskMode> {};

TEST_P(MaskGradient, MatchesFiniteDifferencesInTheMaskValue) {
    const MaskMode mode = GetParam();
    const GaussianCloud c = random_cloud(10, 2);
    const CameraPose pose = front_camera();
    const RenderSettings settings;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Image w(33, 33);
    for (double& v : w.data) v = u(rng);
    std::vector<double> mask(c.size());
    for (double& m : mask) m = 0.75 + 0.2 * u(rng);

    const MaskedAttributes masked = apply_mask(c, mask, mode);
    const auto colors = sh_colors(c, pose);
    SplatView view{c.positions, c.rotations, masked.scales, masked.opacities, colors, {}};
    RenderTape tape;
    rasterize(view, pose, settings, &tape);
    const auto g = mask_value_gradient(c, mask, mode, backward(w, view, tape), pose, settings);
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double h = 1e-6, keep = mask[i];
        mask[i] = keep + h;
        const double up = weighted_sum(render_masked(c, mask, mode, pose, settings), w);
        mask[i] = keep - h;
        const double down = weighted_sum(render_masked(c, mask, mode, pose, settings), w);
        mask[i] = keep;
        const double fd = (up - down) / (2 * h);
        EXPECT_NEAR(g[i], fd, 1e-4 + 1e-4 * std::abs(fd)) << i;
    }
}

INSTANTIATE_TEST_SUITE_P(Modes, MaskGradient,
                         ::testing::Values(MaskMode::both, MaskMode::opacity_only, MaskMode::scale_only));

TEST(Masking, PruningLeavesTheRenderUnchanged) {
    const GaussianCloud c = random_cloud(40, 4);
    MaskState s = MaskState::initialized(c.size());
    for (std::size_t i = 0; i < c.size(); i += 3) s.logits[i] = -8.0;
    const PruneResult pruned = prune(c, s);
    EXPECT_EQ(pruned.cloud.size(), c.size() - 14);
    EXPECT_EQ(pruned.state.size(), pruned.cloud.size());
    for (MaskMode mode : {MaskMode::both, MaskMode::opacity_only}) {
        const Image masked = render_masked(c, binary_mask(s), mode, front_camera(), {});
        const Image after = render_cloud(pruned.cloud, front_camera(), {});
        EXPECT_EQ(masked.data, after.data);
    }
}

TEST(Masking, PruningEverythingIsFlagged) {
    const GaussianCloud c = random_cloud(5, 5);
    MaskState s = MaskState::initialized(c.size());
    for (double& m : s.logits) m = -10.0;
    const PruneResult r = prune(c, s);
    EXPECT_TRUE(r.all_masked);
    EXPECT_TRUE(r.cloud.empty());
}

struct DecoyRun {
    std::size_t kept = 0;
    std::size_t decoys_kept = 0;
};

DecoyRun train_on_decoys(double lambda) {
    const SyntheticScene scene = make_decoy_scene(100, 100, 8, 32, 32, 1);
    const auto refs = render_references(scene.cloud, scene.cameras, {});
    MaskTrainConfig cfg;
    cfg.lambda_mask = lambda;
    const MaskTrainResult r = train_mask(scene.cloud, scene.cameras, refs, cfg);
    DecoyRun out;
    out.kept = r.kept.size();
    for (std::size_t k : r.kept) out.decoys_kept += k >= 100;
    return out;
}

TEST(MaskTraining, CountNeverGrowsWithLambda) {
    const DecoyRun none = train_on_decoys(0.0);
    const DecoyRun base = train_on_decoys(5e-4);
    const DecoyRun strong = train_on_decoys(5e-3);
    EXPECT_EQ(none.kept, 200u);  // nothing pushes a logit without the masking term
    EXPECT_GE(none.kept, base.kept);
    EXPECT_GE(base.kept, strong.kept);
    EXPECT_LE(base.decoys_kept, 5u);
}

TEST(MaskTraining, LogsEveryIterationAndPrunesOnSchedule) {
    const SyntheticScene scene = make_decoy_scene(16, 16, 2, 24, 24, 2);
    const auto refs = render_references(scene.cloud, scene.cameras, {});
    MaskTrainConfig cfg;
    cfg.iterations = 1700;
    const MaskTrainResult r = train_mask(scene.cloud, scene.cameras, refs, cfg);
    ASSERT_EQ(r.log.size(), 1700u);
    for (std::size_t i = 1; i < r.log.size(); ++i) {
        EXPECT_EQ(r.log[i].iteration, i + 1);
        if (r.log[i].n_gaussians != r.log[i - 1].n_gaussians) {
            EXPECT_EQ(r.log[i - 1].iteration % 500, 0u);
        }
    }
    EXPECT_LT(r.cloud.size(), 32u);
    EXPECT_EQ(r.state.size(), r.cloud.size());

    std::ostringstream csv;
    write_mask_log_csv(csv, r.log);
    EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "iteration,n_gaussians,l_ren,l_m");
}

TEST(MaskTraining, RejectsMissingReferences) {
    const SyntheticScene scene = make_decoy_scene(4, 4, 2, 16, 16, 3);
    EXPECT_THROW(train_mask(scene.cloud, scene.cameras, {}, MaskTrainConfig{}), Error);
}

}  // namespace
