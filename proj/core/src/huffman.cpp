// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include "gscodec/error.hpp"
#include "gscodec/postproc.hpp"

#include <algorithm>
#include <array>
#include <queue>
#include <tuple>

namespace gscodec {

namespace {

// Code lengths of an unrestricted Huffman tree. Ties are broken by node id,
// so the result is fully determined by the frequencies.
std::array<int, 256> tree_lengths(const std::array<std::uint64_t, 256>& freq) {
    struct Node {
        std::uint64_t weight;
        int id;
        int left, right;
    };
    std::vector<Node> nodes;
    using Item = std::pair<std::uint64_t, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (int s = 0; s < 256; ++s) {
        if (freq[s] == 0) continue;
        nodes.push_back({freq[s], static_cast<int>(nodes.size()), -1, s});
        heap.emplace(freq[s], nodes.back().id);
    }
    std::array<int, 256> lengths{};
    if (nodes.empty()) return lengths;
    if (nodes.size() == 1) {
        lengths[nodes[0].right] = 1;
        return lengths;
    }
    while (heap.size() > 1) {
        const auto [wa, a] = heap.top();
        heap.pop();
        const auto [wb, b] = heap.top();
        heap.pop();
        nodes.push_back({wa + wb, static_cast<int>(nodes.size()), a, b});
        heap.emplace(wa + wb, nodes.back().id);
    }
    std::vector<std::pair<int, int>> stack{{heap.top().second, 0}};
    while (!stack.empty()) {
        const auto [id, depth] = stack.back();
        stack.pop_back();
        const Node& node = nodes[id];
        if (node.left < 0) {
            lengths[node.right] = depth;
        } else {
            stack.emplace_back(node.left, depth + 1);
            stack.emplace_back(node.right, depth + 1);
        }
    }
    return lengths;
}

struct CanonicalCode {
    std::array<std::uint32_t, 256> codes{};
    std::vector<int> sorted;  // symbols ordered by (length, symbol)
};

CanonicalCode canonical(const std::array<std::uint8_t, 256>& lengths) {
    CanonicalCode out;
    for (int s = 0; s < 256; ++s)
        if (lengths[s] > 0) out.sorted.push_back(s);
    std::stable_sort(out.sorted.begin(), out.sorted.end(),
                     [&](int a, int b) { return lengths[a] < lengths[b]; });
    std::uint64_t code = 0;
    int prev = 0;
    for (int s : out.sorted) {
        code <<= (lengths[s] - prev);
        prev = lengths[s];
        out.codes[s] = static_cast<std::uint32_t>(code);
        ++code;
    }
    return out;
}

void check_kraft(const std::array<std::uint8_t, 256>& lengths) {
    // Sum of 2^(32 - len) must not exceed 2^32.
    std::uint64_t total = 0;
    for (std::uint8_t len : lengths) {
        if (len > kMaxHuffmanCodeLength)
            throw DecodeError(DecodeError::Code::malformed, "Huffman code length exceeds 32");
        if (len > 0) total += 1ull << (kMaxHuffmanCodeLength - len);
    }
    if (total > (1ull << kMaxHuffmanCodeLength))
        throw DecodeError(DecodeError::Code::malformed, "Huffman code lengths violate the Kraft inequality");
}

}  // namespace

HuffmanBlob huffman_encode(std::span<const std::uint8_t> symbols) {
    HuffmanBlob blob;
    blob.symbol_count = symbols.size();
    std::array<std::uint64_t, 256> freq{};
    for (std::uint8_t s : symbols) ++freq[s];

    std::array<int, 256> lengths = tree_lengths(freq);
    while (*std::max_element(lengths.begin(), lengths.end()) > kMaxHuffmanCodeLength) {
        for (auto& f : freq)
            if (f > 0) f = std::max<std::uint64_t>(1, f >> 1);
        lengths = tree_lengths(freq);
    }
    for (int s = 0; s < 256; ++s) blob.code_lengths[s] = static_cast<std::uint8_t>(lengths[s]);

    const CanonicalCode code = canonical(blob.code_lengths);
    std::uint64_t total_bits = 0;
    for (std::uint8_t s : symbols) total_bits += blob.code_lengths[s];
    blob.payload.assign((total_bits + 7) / 8, 0);

    std::uint64_t bit = 0;
    for (std::uint8_t s : symbols) {
        const int len = blob.code_lengths[s];
        const std::uint32_t c = code.codes[s];
        for (int i = len - 1; i >= 0; --i, ++bit)
            if ((c >> i) & 1u) blob.payload[bit >> 3] |= static_cast<std::uint8_t>(0x80u >> (bit & 7));
    }
    return blob;
}

std::vector<std::uint8_t> huffman_decode(const HuffmanBlob& blob) {
    check_kraft(blob.code_lengths);
    const CanonicalCode code = canonical(blob.code_lengths);
    if (blob.symbol_count > 0 && code.sorted.empty())
        throw DecodeError(DecodeError::Code::malformed, "Huffman table is empty");

    // first[len]: first canonical code of that length; offset[len]: index in sorted.
    std::array<std::uint64_t, kMaxHuffmanCodeLength + 2> first{}, count{}, offset{};
    for (int s : code.sorted) ++count[blob.code_lengths[s]];
    std::uint64_t next = 0, index = 0;
    for (int len = 1; len <= kMaxHuffmanCodeLength; ++len) {
        next = (next + count[len - 1]) << 1;
        first[len] = next;
        offset[len] = index;
        index += count[len];
    }

    std::vector<std::uint8_t> out;
    out.reserve(blob.symbol_count);
    const std::uint64_t total_bits = static_cast<std::uint64_t>(blob.payload.size()) * 8;
    std::uint64_t bit = 0;
    while (out.size() < blob.symbol_count) {
        std::uint64_t c = 0;
        int len = 0;
        for (;;) {
            if (bit >= total_bits)
                throw DecodeError(DecodeError::Code::truncated, "Huffman payload ended early");
            c = (c << 1) | ((blob.payload[bit >> 3] >> (7 - (bit & 7))) & 1u);
            ++bit;
            ++len;
            if (len > kMaxHuffmanCodeLength)
                throw DecodeError(DecodeError::Code::malformed, "invalid Huffman code in payload");
            if (count[len] > 0 && c >= first[len] && c - first[len] < count[len]) {
                out.push_back(static_cast<std::uint8_t>(code.sorted[offset[len] + (c - first[len])]));
                break;
            }
        }
    }
    return out;
}

void append_huffman_blob(std::vector<std::uint8_t>& out, const HuffmanBlob& blob) {
    out.insert(out.end(), blob.code_lengths.begin(), blob.code_lengths.end());
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(blob.symbol_count >> (8 * i)));
    out.insert(out.end(), blob.payload.begin(), blob.payload.end());
}

HuffmanBlob parse_huffman_blob(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 264) throw DecodeError(DecodeError::Code::truncated, "Huffman blob shorter than its header");
    HuffmanBlob blob;
    std::copy_n(bytes.begin(), 256, blob.code_lengths.begin());
    for (int i = 0; i < 8; ++i) blob.symbol_count |= static_cast<std::uint64_t>(bytes[256 + i]) << (8 * i);
    blob.payload.assign(bytes.begin() + 264, bytes.end());
    return blob;
}

}  // namespace gscodec
