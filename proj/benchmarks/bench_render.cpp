// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include <gscodec/parallel.hpp>
#include <gscodec/pipeline.hpp>
#include <gscodec/synthetic.hpp>

#include <benchmark/benchmark.h>

#include <map>

namespace {

using namespace gscodec;

struct DecodedFixture {
    SyntheticScene scene;
    DecodedScene decoded;
    FeatureCache cache;

    explicit DecodedFixture(std::size_t n) {
        scene = make_toy_scene({n, 0, 1, 128, 128, 8, 8, 10});
        decoded.positions = scene.cloud.positions;
        decoded.opacities = scene.cloud.opacities;
        decoded.scales = scene.cloud.scales;
        decoded.rotations = scene.cloud.rotations;
        decoded.field = ColorField::initialized(FieldConfig::real_scene(), 1);
        cache = precompute_features(decoded.positions, decoded.field);
    }
};

const DecodedFixture& fixture(std::size_t n) {
    static std::map<std::size_t, DecodedFixture> fixtures;
    auto it = fixtures.find(n);
    if (it == fixtures.end()) it = fixtures.emplace(n, DecodedFixture(n)).first;
    return it->second;
}

void BM_RenderUncached(benchmark::State& state) {
    set_thread_count(1);
    const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(render_decoded(f.decoded, f.scene.cameras[0], {}));
}

void BM_RenderCached(benchmark::State& state) {
    set_thread_count(1);
    const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(render_decoded(f.decoded, f.scene.cameras[0], {}, &f.cache));
}

void BM_RenderSh(benchmark::State& state) {
    set_thread_count(1);
    const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(render_cloud(f.scene.cloud, f.scene.cameras[0], {}));
}

BENCHMARK(BM_RenderUncached)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderCached)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderSh)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond);

}  // namespace
