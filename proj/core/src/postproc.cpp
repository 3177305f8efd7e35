// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include "gscodec/postproc.hpp"

#include "gscodec/color_field.hpp"
#include "gscodec/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gscodec {

QuantizedTensor quantize_u8(std::span<const double> values) {
    if (values.empty()) throw Error("cannot quantize an empty tensor");
    double lo = values[0], hi = values[0];
    for (double v : values) {
        if (!std::isfinite(v)) throw Error("cannot quantize a non-finite value");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    QuantizedTensor out;
    out.min = static_cast<float>(lo);
    if (out.min > lo) out.min = std::nextafter(out.min, -std::numeric_limits<float>::infinity());
    out.max = static_cast<float>(hi);
    if (out.max < hi) out.max = std::nextafter(out.max, std::numeric_limits<float>::infinity());
    out.symbols.assign(values.size(), 0);
    if (out.min == out.max) return out;
    const double range = static_cast<double>(out.max) - out.min;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double q = std::floor(255.0 * (values[i] - out.min) / range + 0.5);
        out.symbols[i] = static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
    }
    return out;
}

std::vector<double> dequantize(const QuantizedTensor& tensor) {
    std::vector<double> out(tensor.size());
    const double range = static_cast<double>(tensor.max) - tensor.min;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = tensor.min + (tensor.symbols[i] / 255.0) * range;
    return out;
}

std::vector<std::uint8_t> bitpack(std::span<const std::uint16_t> values, int bits) {
    if (bits < 1 || bits > 16) throw Error("bit width must be in [1,16]");
    std::vector<std::uint8_t> out((values.size() * static_cast<std::size_t>(bits) + 7) / 8, 0);
    std::size_t bit = 0;
    for (std::uint16_t v : values) {
        if (bits < 16 && v >= (1u << bits))
            throw Error("value " + std::to_string(v) + " does not fit in " + std::to_string(bits) + " bits");
        for (int i = bits - 1; i >= 0; --i, ++bit)
            if ((v >> i) & 1u) out[bit >> 3] |= static_cast<std::uint8_t>(0x80u >> (bit & 7));
    }
    return out;
}

std::vector<std::uint16_t> bitunpack(std::span<const std::uint8_t> bytes, int bits, std::size_t count) {
    if (bits < 1 || bits > 16) throw Error("bit width must be in [1,16]");
    if (bytes.size() * 8 < count * static_cast<std::size_t>(bits))
        throw DecodeError(DecodeError::Code::truncated, "bit-packed stream is too short");
    std::vector<std::uint16_t> out(count);
    std::size_t bit = 0;
    for (std::size_t n = 0; n < count; ++n) {
        std::uint32_t v = 0;
        for (int i = 0; i < bits; ++i, ++bit) v = (v << 1) | ((bytes[bit >> 3] >> (7 - (bit & 7))) & 1u);
        out[n] = static_cast<std::uint16_t>(v);
    }
    return out;
}

int bits_for(std::size_t n) {
    int bits = 1;
    while ((std::size_t{1} << bits) < n) ++bits;
    return bits;
}

PrunedTable prune_table(std::span<const double> values, double threshold) {
    PrunedTable out;
    out.length = values.size();
    out.bitmap.assign((values.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::abs(values[i]) < threshold) continue;
        out.bitmap[i >> 3] |= static_cast<std::uint8_t>(0x80u >> (i & 7));
        out.survivors.push_back(values[i]);
    }
    return out;
}

std::vector<double> unprune_table(std::span<const std::uint8_t> bitmap, std::size_t length,
                                  std::span<const double> survivors) {
    if (bitmap.size() * 8 < length) throw DecodeError(DecodeError::Code::truncated, "occupancy bitmap is too short");
    std::vector<double> out(length, 0.0);
    std::size_t next = 0;
    for (std::size_t i = 0; i < length; ++i) {
        if (!((bitmap[i >> 3] >> (7 - (i & 7))) & 1u)) continue;
        if (next >= survivors.size())
            throw DecodeError(DecodeError::Code::malformed, "occupancy bitmap lists more values than stored");
        out[i] = survivors[next++];
    }
    if (next != survivors.size())
        throw DecodeError(DecodeError::Code::malformed, "occupancy bitmap lists fewer values than stored");
    return out;
}

std::vector<double> unprune_table(const PrunedTable& table) {
    return unprune_table(table.bitmap, table.length, table.survivors);
}

std::vector<PrunedTable> prune_hash(ColorField& field, double threshold) {
    std::vector<PrunedTable> out;
    for (int level = 0; level < field.config().num_levels; ++level) {
        auto values = field.table(level);
        out.push_back(prune_table(values, threshold));
        for (double& v : values)
            if (std::abs(v) < threshold) v = 0.0;
    }
    return out;
}

}  // namespace gscodec
