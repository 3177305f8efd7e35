// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gscodec {

/// 8-bit min-max quantized tensor. min/max are float32-representable.
struct QuantizedTensor {
    std::vector<std::uint8_t> symbols;
    float min = 0.0f;
    float max = 0.0f;

    std::size_t size() const { return symbols.size(); }
    double step() const { return (static_cast<double>(max) - min) / 255.0; }
};

/// q = round_half_away(255 (x - min) / (max - min)); all zero when min == max.
/// Throws on empty or non-finite input.
QuantizedTensor quantize_u8(std::span<const double> values);

/// x = min + q / 255 (max - min).
std::vector<double> dequantize(const QuantizedTensor& tensor);

/// Canonical Huffman code over bytes.
struct HuffmanBlob {
    std::array<std::uint8_t, 256> code_lengths{};
    std::uint64_t symbol_count = 0;
    std::vector<std::uint8_t> payload;

    /// Table (256) + count (8) + payload bytes.
    std::size_t serialized_size() const { return 256 + 8 + payload.size(); }
};

/// Longest code the encoder emits.
inline constexpr int kMaxHuffmanCodeLength = 32;

HuffmanBlob huffman_encode(std::span<const std::uint8_t> symbols);

/// Throws DecodeError when the table violates the Kraft inequality or the
/// payload ends before symbol_count symbols are read.
std::vector<std::uint8_t> huffman_decode(const HuffmanBlob& blob);

void append_huffman_blob(std::vector<std::uint8_t>& out, const HuffmanBlob& blob);
/// Parses a blob occupying exactly `bytes`.
HuffmanBlob parse_huffman_blob(std::span<const std::uint8_t> bytes);

/// MSB-first packing of `bits`-wide values (1..16). Throws on an index that
/// does not fit.
std::vector<std::uint8_t> bitpack(std::span<const std::uint16_t> values, int bits);
std::vector<std::uint16_t> bitunpack(std::span<const std::uint8_t> bytes, int bits, std::size_t count);

/// ceil(log2(n)), at least 1.
int bits_for(std::size_t n);

/// Hash table values after threshold pruning: a 1-bit-per-value occupancy
/// bitmap (MSB-first) and the surviving values in order.
struct PrunedTable {
    std::size_t length = 0;
    std::vector<std::uint8_t> bitmap;
    std::vector<double> survivors;
};

/// Drops values with |v| < threshold.
PrunedTable prune_table(std::span<const double> values, double threshold = 0.1);

/// Rebuilds the dense table with zeros in pruned slots.
std::vector<double> unprune_table(const PrunedTable& table);
std::vector<double> unprune_table(std::span<const std::uint8_t> bitmap, std::size_t length,
                                  std::span<const double> survivors);

class ColorField;

/// Applies prune_table to every level of the field's hash grid in place and
/// returns the per-level pruning results.
std::vector<PrunedTable> prune_hash(ColorField& field, double threshold = 0.1);

}  // namespace gscodec
