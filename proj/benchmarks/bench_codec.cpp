// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include <gscodec/postproc.hpp>
#include <gscodec/rvq.hpp>

#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

namespace {

using namespace gscodec;

VectorSet random_vectors(std::size_t n, std::size_t dim) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal;
    VectorSet v(n, dim);
    for (double& x : v.values) x = normal(rng);
    return v;
}

void BM_RvqEncode(benchmark::State& state) {
    const VectorSet v = random_vectors(static_cast<std::size_t>(state.range(0)), 4);
    RvqTrainOptions opts;
    opts.iterations = 0;
    const RvqCodec codec = train_rvq(v, opts).codec;
    for (auto _ : state) benchmark::DoNotOptimize(rvq_encode(v, codec));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_KMeans(benchmark::State& state) {
    const VectorSet v = random_vectors(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) benchmark::DoNotOptimize(kmeans(v, 64));
}

std::vector<std::uint8_t> skewed_symbols(std::size_t n) {
    std::mt19937_64 rng(2);
    std::geometric_distribution<int> geo(0.2);
    std::vector<std::uint8_t> s(n);
    for (auto& x : s) x = static_cast<std::uint8_t>(std::min(geo(rng), 255));
    return s;
}

void BM_HuffmanEncode(benchmark::State& state) {
    const auto symbols = skewed_symbols(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(huffman_encode(symbols));
    state.SetBytesProcessed(state.iterations() * state.range(0));
}

void BM_HuffmanDecode(benchmark::State& state) {
    const HuffmanBlob blob = huffman_encode(skewed_symbols(static_cast<std::size_t>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(huffman_decode(blob));
    state.SetBytesProcessed(state.iterations() * state.range(0));
}

void BM_Bitpack(benchmark::State& state) {
    std::vector<std::uint16_t> v(static_cast<std::size_t>(state.range(0)));
    std::mt19937_64 rng(3);
    for (auto& x : v) x = static_cast<std::uint16_t>(rng() % 64);
    for (auto _ : state) benchmark::DoNotOptimize(bitunpack(bitpack(v, 6), 6, v.size()));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(BM_RvqEncode)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KMeans)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HuffmanEncode)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HuffmanDecode)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Bitpack)->Arg(1 << 20)->Unit(benchmark::kMillisecond);

}  // namespace
