// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include <gscodec/color_field.hpp>
#include <gscodec/error.hpp>
#include <gscodec/postproc.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>

namespace {

using namespace gscodec;

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

TEST(Quantize, EndpointsAndHalfwayRounding) {
    const std::vector<double> v{0.0, 1.0, 2.0};
    const QuantizedTensor q = quantize_u8(v);
    EXPECT_EQ(q.symbols, (std::vector<std::uint8_t>{0, 128, 255}));
    EXPECT_EQ(q.min, 0.0f);
    EXPECT_EQ(q.max, 2.0f);
    const auto back = dequantize(q);
    EXPECT_NEAR(back[1], 2.0 * 128 / 255, 1e-12);
    EXPECT_DOUBLE_EQ(back[0], 0.0);
    EXPECT_DOUBLE_EQ(back[2], 2.0);
}

TEST(Quantize, ErrorIsBoundedByHalfAStep) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.7, 3.1);
    std::vector<double> v(5000);
    for (double& x : v) x = u(rng);
    const QuantizedTensor q = quantize_u8(v);
    const auto back = dequantize(q);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_LE(std::abs(back[i] - v[i]), q.step() / 2 + 1e-6);
}

TEST(Quantize, ConstantAndInvalidInput) {
    const std::vector<double> c(4, 0.25);
    const QuantizedTensor q = quantize_u8(c);
    for (auto s : q.symbols) EXPECT_EQ(s, 0);
    for (double x : dequantize(q)) EXPECT_DOUBLE_EQ(x, 0.25);
    EXPECT_THROW(quantize_u8(std::vector<double>{}), Error);
    EXPECT_THROW(quantize_u8(std::vector<double>{1.0, std::nan("")}), Error);
}

TEST(Huffman, CanonicalCodeForASmallMessage) {
    // a:4 b:2 c:1 gives a=0 b=10 c=11.
    const HuffmanBlob blob = huffman_encode(bytes_of("aaaabbc"));
    EXPECT_EQ(blob.code_lengths['a'], 1);
    EXPECT_EQ(blob.code_lengths['b'], 2);
    EXPECT_EQ(blob.code_lengths['c'], 2);
    EXPECT_EQ(blob.symbol_count, 7u);
    EXPECT_EQ(blob.payload, (std::vector<std::uint8_t>{0x0A, 0xC0}));
    EXPECT_EQ(huffman_decode(blob), bytes_of("aaaabbc"));
}

TEST(Huffman, FibonacciFrequenciesAreLengthLimited) {
    std::vector<std::uint8_t> msg;
    std::uint64_t a = 1, b = 1;
    for (int s = 0; s < 35; ++s) {
        msg.insert(msg.end(), a, static_cast<std::uint8_t>(s));
        const std::uint64_t n = a + b;
        a = b;
        b = n;
    }
    const HuffmanBlob blob = huffman_encode(msg);
    double kraft = 0.0;
    int longest = 0;
    for (int s = 0; s < 256; ++s)
        if (blob.code_lengths[s]) {
            kraft += std::ldexp(1.0, -blob.code_lengths[s]);
            longest = std::max<int>(longest, blob.code_lengths[s]);
        }
    EXPECT_LE(longest, kMaxHuffmanCodeLength);
    EXPECT_LE(kraft, 1.0);
    EXPECT_EQ(huffman_decode(blob), msg);
}

TEST(Huffman, SingleSymbolAndEmpty) {
    const std::vector<std::uint8_t> one(100, 42);
    EXPECT_EQ(huffman_decode(huffman_encode(one)), one);
    const HuffmanBlob empty = huffman_encode(std::vector<std::uint8_t>{});
    EXPECT_TRUE(huffman_decode(empty).empty());
}

TEST(Huffman, RoundTripsRandomAndSkewedData) {
    std::mt19937_64 rng(11);
    std::vector<std::uint8_t> uniform(20000), skewed(20000);
    std::geometric_distribution<int> geo(0.3);
    for (auto& s : uniform) s = static_cast<std::uint8_t>(rng());
    for (auto& s : skewed) s = static_cast<std::uint8_t>(std::min(geo(rng), 255));
    EXPECT_EQ(huffman_decode(huffman_encode(uniform)), uniform);
    const HuffmanBlob blob = huffman_encode(skewed);
    EXPECT_EQ(huffman_decode(blob), skewed);
    EXPECT_LT(blob.payload.size(), skewed.size() / 2);

    std::vector<std::uint8_t> wire;
    append_huffman_blob(wire, blob);
    EXPECT_EQ(wire.size(), blob.serialized_size());
    EXPECT_EQ(huffman_decode(parse_huffman_blob(wire)), skewed);
}

TEST(Huffman, CorruptBlobsAreRejected) {
    HuffmanBlob blob = huffman_encode(bytes_of("abracadabra"));
    HuffmanBlob truncated = blob;
    truncated.payload.pop_back();
    try {
        huffman_decode(truncated);
        FAIL();
    } catch (const DecodeError& e) {
        EXPECT_EQ(e.code(), DecodeError::Code::truncated);
    }
    HuffmanBlob over = blob;
    over.code_lengths['x'] = 1;
    over.code_lengths['y'] = 1;
    try {
        huffman_decode(over);
        FAIL();
    } catch (const DecodeError& e) {
        EXPECT_EQ(e.code(), DecodeError::Code::malformed);
    }
    EXPECT_THROW(parse_huffman_blob(std::vector<std::uint8_t>(100)), DecodeError);
}

TEST(Bitpack, MsbFirstLayout) {
    const std::vector<std::uint16_t> v{1, 2, 3};
    EXPECT_EQ(bitpack(v, 2), (std::vector<std::uint8_t>{0x6C}));
    EXPECT_EQ(bitunpack(bitpack(v, 2), 2, 3), v);
    EXPECT_THROW(bitpack(std::vector<std::uint16_t>{4}, 2), Error);
    EXPECT_THROW(bitpack(v, 0), Error);
    EXPECT_THROW(bitunpack(std::vector<std::uint8_t>{0}, 6, 2), DecodeError);
}

TEST(Bitpack, RoundTripsEveryWidth) {
    std::mt19937_64 rng(2);
    for (int bits = 1; bits <= 16; ++bits) {
        std::vector<std::uint16_t> v(257);
        for (auto& x : v) x = static_cast<std::uint16_t>(rng() & ((1u << bits) - 1));
        const auto packed = bitpack(v, bits);
        EXPECT_EQ(packed.size(), (v.size() * bits + 7) / 8);
        EXPECT_EQ(bitunpack(packed, bits, v.size()), v) << bits;
    }
    EXPECT_EQ(bits_for(1), 1);
    EXPECT_EQ(bits_for(2), 1);
    EXPECT_EQ(bits_for(64), 6);
    EXPECT_EQ(bits_for(65), 7);
}

TEST(Prune, BitmapAndSurvivors) {
    const std::vector<double> v{0.5, 0.01, -0.3};
    const PrunedTable t = prune_table(v);
    EXPECT_EQ(t.length, 3u);
    EXPECT_EQ(t.bitmap, (std::vector<std::uint8_t>{0xA0}));
    EXPECT_EQ(t.survivors, (std::vector<double>{0.5, -0.3}));
    EXPECT_EQ(unprune_table(t), (std::vector<double>{0.5, 0.0, -0.3}));
    EXPECT_THROW(unprune_table(t.bitmap, 3, std::vector<double>{0.5}), DecodeError);
}

TEST(Prune, HashPruningOfAWholeField) {
    FieldConfig cfg;
    cfg.num_levels = 2;
    cfg.base_resolution = 4;
    cfg.max_resolution = 16;
    cfg.max_hashmap = 1u << 8;
    ColorField f = ColorField::initialized(cfg, 1);
    for (std::size_t i = 0; i < f.table_parameter_count(); ++i) f.parameters()[i] = i % 2 ? 1.0 : -1.0;
    const ColorField before = f;
    auto kept = prune_hash(f);
    ASSERT_EQ(kept.size(), 2u);
    for (const auto& t : kept) EXPECT_EQ(t.survivors.size(), t.length);
    EXPECT_TRUE(std::equal(f.parameters().begin(), f.parameters().end(), before.parameters().begin()));

    for (std::size_t i = 0; i < f.table_parameter_count(); ++i) f.parameters()[i] = 0.05;
    for (const auto& t : prune_hash(f)) EXPECT_TRUE(t.survivors.empty());
    for (std::size_t i = 0; i < f.table_parameter_count(); ++i) EXPECT_EQ(f.parameters()[i], 0.0);
    EXPECT_TRUE(std::equal(f.mlp_parameters().begin(), f.mlp_parameters().end(), before.mlp_parameters().begin()));
}

}  // namespace
