// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include <gscodec/error.hpp>
#include <gscodec/ply.hpp>

#include <gtest/gtest.h>

#include <cstring>
#include <random>
#include <string>
#include <vector>

namespace {

using namespace gscodec;

// Hand-built single-vertex PLY with degree-0 SH.
std::vector<std::uint8_t> make_ply(const std::vector<std::string>& names, const std::vector<float>& values,
                                   std::size_t count = 1) {
    std::string header = "ply\nformat binary_little_endian 1.0\nelement vertex " + std::to_string(count) + "\n";
    for (const auto& n : names) header += "property float " + n + "\n";
    header += "end_header\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const std::size_t at = out.size();
    out.resize(at + values.size() * 4);
    std::memcpy(out.data() + at, values.data(), values.size() * 4);
    return out;
}

const std::vector<std::string> kDegree0 = {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
                                           "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"};

TEST(Ply, ActivatesStoredValues) {
    const auto bytes = make_ply(kDegree0, {1, 2, 3, 0.1f, 0.2f, 0.3f, 0.0f, 0, 0, 0, 2, 0, 0, 0});
    const GaussianCloud c = load_ply(bytes);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c.sh_degree, 0);
    EXPECT_DOUBLE_EQ(c.opacities[0], 0.5);
    EXPECT_DOUBLE_EQ(c.scales[0].x(), 1.0);
    EXPECT_DOUBLE_EQ(c.scales[0].z(), 1.0);
    EXPECT_DOUBLE_EQ(c.rotations[0][0], 1.0);  // normalized
    EXPECT_FLOAT_EQ(static_cast<float>(c.sh[1]), 0.2f);
}

TEST(Ply, CanonicalizesQuaternionSign) {
    const auto bytes = make_ply(kDegree0, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, -1, 0, 0, 0});
    EXPECT_DOUBLE_EQ(load_ply(bytes).rotations[0][0], 1.0);
}

TEST(Ply, RejectsMissingProperty) {
    auto names = kDegree0;
    names.erase(names.begin() + 6);  // opacity
    try {
        load_ply(make_ply(names, std::vector<float>(13, 0.0f)));
        FAIL();
    } catch (const PlyError& e) {
        EXPECT_EQ(e.property(), "opacity");
    }
}

TEST(Ply, RejectsOddRestCount) {
    auto names = kDegree0;
    for (int i = 0; i < 5; ++i) names.push_back("f_rest_" + std::to_string(i));
    std::vector<float> values(names.size(), 0.0f);
    values[10] = 1.0f;
    EXPECT_THROW(load_ply(make_ply(names, values)), PlyError);
}

TEST(Ply, RejectsTruncatedBodyAndNonFinite) {
    auto bytes = make_ply(kDegree0, std::vector<float>(14, 0.0f));
    bytes.resize(bytes.size() - 4);
    EXPECT_THROW(load_ply(bytes), PlyError);
    std::vector<float> values(14, 0.0f);
    values[10] = 1.0f;
    values[0] = std::numeric_limits<float>::quiet_NaN();
    EXPECT_THROW(load_ply(make_ply(kDegree0, values)), PlyError);
}

TEST(Ply, RejectsAsciiFormat) {
    const std::string text = "ply\nformat ascii 1.0\nelement vertex 0\nend_header\n";
    EXPECT_THROW(load_ply(std::vector<std::uint8_t>(text.begin(), text.end())), PlyError);
}

TEST(Ply, RoundTripsRandomCloud) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GaussianCloud c;
    c.sh_degree = 3;
    c.resize(50);
    for (std::size_t i = 0; i < c.size(); ++i) {
        c.positions[i] = Vec3(u(rng), u(rng), u(rng));
        c.opacities[i] = 0.5 + 0.45 * u(rng);
        c.scales[i] = Vec3(0.02 + 0.01 * u(rng), 0.05, 0.1 + 0.05 * u(rng));
        c.rotations[i] = canonical_quaternion(Vec4(u(rng), u(rng), u(rng), u(rng)));
        for (double& v : c.sh_of(i)) v = u(rng);
    }
    const GaussianCloud d = load_ply(save_ply(c));
    ASSERT_EQ(d.size(), c.size());
    ASSERT_EQ(d.sh_degree, 3);
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_LT((d.positions[i] - c.positions[i]).norm(), 1e-6);
        EXPECT_NEAR(d.opacities[i], c.opacities[i], 1e-6);
        EXPECT_LT((d.scales[i] - c.scales[i]).norm(), 1e-6);
        EXPECT_LT((d.rotations[i] - c.rotations[i]).norm(), 1e-6);
        for (std::size_t k = 0; k < c.sh_of(i).size(); ++k) EXPECT_NEAR(d.sh_of(i)[k], c.sh_of(i)[k], 1e-6);
    }
}

TEST(Ply, ClampsSaturatedOpacity) {
    GaussianCloud c;
    c.resize(2);
    c.opacities = {0.0, 1.0};
    PlySaveReport report;
    const GaussianCloud d = load_ply(save_ply(c, &report));
    EXPECT_EQ(report.clamped_opacities, 2u);
    EXPECT_NEAR(d.opacities[0], 1e-6, 1e-9);
    EXPECT_NEAR(d.opacities[1], 1.0 - 1e-6, 1e-9);
}

}  // namespace
