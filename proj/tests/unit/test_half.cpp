// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include <gscodec/half.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace {

using gscodec::float_to_half;
using gscodec::half_to_float;

// Reference decoder written from the binary16 definition.
double decode_reference(std::uint16_t h) {
    const int sign = h >> 15;
    const int exponent = (h >> 10) & 0x1f;
    const int mantissa = h & 0x3ff;
    double v;
    if (exponent == 0) v = std::ldexp(mantissa, -24);
    else if (exponent == 31) v = mantissa ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
    else v = std::ldexp(1024 + mantissa, exponent - 25);
    return sign ? -v : v;
}

TEST(Half, KnownEncodings) {
    EXPECT_EQ(float_to_half(0.0f), 0x0000);
    EXPECT_EQ(float_to_half(-0.0f), 0x8000);
    EXPECT_EQ(float_to_half(1.0f), 0x3c00);
    EXPECT_EQ(float_to_half(-2.0f), 0xc000);
    EXPECT_EQ(float_to_half(65504.0f), 0x7bff);
    EXPECT_EQ(float_to_half(std::ldexp(1.0f, -24)), 0x0001);
    EXPECT_EQ(float_to_half(std::numeric_limits<float>::infinity()), 0x7c00);
}

TEST(Half, TiesRoundToEven) {
    EXPECT_EQ(float_to_half(1.0f + std::ldexp(1.0f, -11)), 0x3c00);      // halfway, even below
    EXPECT_EQ(float_to_half(1.0f + 3 * std::ldexp(1.0f, -11)), 0x3c02);  // halfway, even above
    EXPECT_EQ(float_to_half(std::ldexp(1.0f, -25)), 0x0000);             // half the smallest subnormal
    EXPECT_EQ(float_to_half(3 * std::ldexp(1.0f, -25)), 0x0002);
    EXPECT_EQ(float_to_half(65520.0f), 0x7c00);                          // ties up into infinity
}

TEST(Half, OverflowSaturatesAndNanStaysNan) {
    EXPECT_EQ(float_to_half(1e6f), 0x7c00);
    EXPECT_EQ(float_to_half(-1e6f), 0xfc00);
    EXPECT_TRUE(std::isnan(half_to_float(float_to_half(std::numeric_limits<float>::quiet_NaN()))));
}

TEST(Half, DecodesEveryPattern) {
    for (std::uint32_t h = 0; h < 0x10000; ++h) {
        const double expected = decode_reference(static_cast<std::uint16_t>(h));
        const float got = half_to_float(static_cast<std::uint16_t>(h));
        if (std::isnan(expected)) EXPECT_TRUE(std::isnan(got)) << h;
        else EXPECT_EQ(static_cast<double>(got), expected) << h;
    }
}

TEST(Half, EncodesToNearestRepresentable) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<float> mag(-20.0f, 16.0f);
    for (int i = 0; i < 20000; ++i) {
        const float x = std::exp2(mag(rng)) * (i % 2 ? -1.0f : 1.0f);
        const std::uint16_t h = float_to_half(x);
        const double got = decode_reference(h);
        // No other finite half is strictly closer, and ties pick the even pattern.
        for (int delta : {-1, 1}) {
            const int other = (h & 0x7fff) + delta;
            if (other < 0 || other >= 0x7c00) continue;
            const double alt = decode_reference(static_cast<std::uint16_t>((h & 0x8000) | other));
            const double d_got = std::abs(got - x), d_alt = std::abs(alt - x);
            EXPECT_LE(d_got, d_alt) << x;
            if (d_got == d_alt) {
                EXPECT_EQ(h & 1, 0) << x;
            }
        }
    }
}

}  // namespace
