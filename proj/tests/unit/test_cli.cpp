// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include "gscodec_cli/commands.hpp"
#include "gscodec_cli/sweep.hpp"

#include <gscodec/error.hpp>
#include <gscodec/ply.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

namespace {

using namespace gscodec;
using namespace gscodec::cli;

TEST(RunConfig, DefaultsMapOntoThePipeline) {
    const PipelineConfig p = RunConfig{}.to_pipeline();
    EXPECT_DOUBLE_EQ(p.mask.lambda_mask, 5e-4);
    EXPECT_EQ(p.codebook_size, 64u);
    EXPECT_EQ(p.num_stages, 6u);
    EXPECT_EQ(p.field, FieldConfig::real_scene());
    EXPECT_TRUE(p.post.enabled);
    EXPECT_EQ(hash_log2_of(p.field), 19);

    RunConfig r;
    r.field_preset = FieldPreset::toy;
    r.hash_log2 = 10;
    EXPECT_EQ(r.to_pipeline().field.max_hashmap, 1u << 10);
    r.long_schedule = true;
    EXPECT_EQ(r.to_pipeline().mask.iterations, 30000u);
}

TEST(RunConfig, RejectsBadValues) {
    RunConfig r;
    r.hash_log2 = 2;
    EXPECT_THROW(r.to_pipeline(), Error);
    r.hash_log2 = 31;
    EXPECT_THROW(r.to_pipeline(), Error);
    r = RunConfig{};
    r.stages = 0;
    EXPECT_THROW(r.to_pipeline(), Error);
    EXPECT_THROW(parse_field_preset("huge"), Error);
    EXPECT_EQ(parse_field_preset(to_string(FieldPreset::synthetic)), FieldPreset::synthetic);
}

TEST(Sweep, GridWalksEachKnobFromTheBase) {
    SweepPoint base;
    base.lambda_mask = 1e-3;
    base.hash_log2 = 12;
    base.stages = 6;
    const auto grid = sweep_grid(base, 3);
    ASSERT_EQ(grid.size(), 10u);
    EXPECT_EQ(grid[0].axis, "base");
    EXPECT_DOUBLE_EQ(grid[3].lambda_mask, 8e-3);
    EXPECT_EQ(grid[3].hash_log2, 12);
    EXPECT_EQ(grid[6].axis, "hash");
    EXPECT_EQ(grid[6].hash_log2, 9);
    EXPECT_EQ(grid[9].axis, "stages");
    EXPECT_EQ(grid[9].stages, 3u);

    base.hash_log2 = 4;
    base.stages = 2;
    const auto clipped = sweep_grid(base, 3);
    EXPECT_EQ(clipped.size(), 1u + 3u + 1u + 1u);
}

SweepRow row(const std::string& axis, std::uint64_t bytes, double psnr) {
    SweepRow r;
    r.point.axis = axis;
    r.ok = true;
    r.bytes = bytes;
    r.psnr = psnr;
    return r;
}

TEST(Sweep, FrontierAndMonotonicity) {
    std::vector<SweepRow> rows{row("base", 1000, 40), row("lambda_m", 900, 39), row("lambda_m", 950, 38),
                               row("hash", 800, 35), row("stages", 990, 39.5)};
    mark_frontier(rows);
    EXPECT_TRUE(rows[0].on_frontier);
    EXPECT_TRUE(rows[1].on_frontier);
    EXPECT_FALSE(rows[2].on_frontier);  // dominated by the 900-byte row
    EXPECT_TRUE(rows[3].on_frontier);
    EXPECT_TRUE(rows[4].on_frontier);
    EXPECT_FALSE(sizes_monotone(rows));  // lambda_m goes 900 -> 950
    rows[2].bytes = 850;
    EXPECT_TRUE(sizes_monotone(rows));
    rows[4].bytes = 1001;
    EXPECT_FALSE(sizes_monotone(rows));

    mark_frontier(rows);
    std::ostringstream all, frontier;
    write_sweep_csv(all, rows, false);
    write_sweep_csv(frontier, rows, true);
    EXPECT_EQ(all.str().substr(0, all.str().find('\n')), "lambda_m,hash_log2,stages,bytes,psnr,n_gaussians,axis,on_frontier");
    auto lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
    EXPECT_EQ(lines(all.str()), 6);
    EXPECT_EQ(lines(frontier.str()), 1 + std::count_if(rows.begin(), rows.end(), [](auto& r) { return r.on_frontier; }));
}

TEST(Eval, ConstantOffsetImages) {
    Image a(16, 16, 0.5), b(16, 16, 0.6);
    const auto rows = evaluate_images({a, a}, {b, a});
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_NEAR(rows[0].psnr, 20.0, 1e-9);
    EXPECT_NEAR(rows[0].l1, 0.1, 1e-12);
    EXPECT_NEAR(rows[1].l1, 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(rows[1].ssim, 1.0);
    std::ostringstream csv;
    write_eval_csv(csv, rows);
    EXPECT_EQ(csv.str().substr(0, 17), "view,psnr,ssim,l1");
    EXPECT_NE(csv.str().find("\nmean,"), std::string::npos);
    EXPECT_THROW(evaluate_images({a}, {}), Error);
}

TEST(Commands, FileRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "gscodec_cli_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    ToySceneOptions toy{300, 0, 2, 24, 24, 4, 4, 9};
    const SyntheticScene scene = cmd_synth(dir / "scene.ply", dir / "cams.json", toy);
    EXPECT_EQ(load_ply_file(dir / "scene.ply").size(), 300u);

    RunConfig rc;
    rc.field_preset = FieldPreset::toy;
    rc.codebook_size = 8;
    rc.stages = 2;
    rc.iters_mask = 40;
    rc.iters_field = 100;
    rc.iters_rvq = 10;
    rc.deterministic = true;
    const PipelineResult r = cmd_compress(dir / "scene.ply", dir / "cams.json", dir / "scene.cgs", rc);
    EXPECT_EQ(std::filesystem::file_size(dir / "scene.cgs"), r.bytes.size());
    EXPECT_EQ(cmd_stats(dir / "scene.cgs").total, r.bytes.size());

    const DecompressReport d = cmd_decompress(dir / "scene.cgs", dir / "out.ply", Vec3(0, 0, 2));
    EXPECT_EQ(d.count, r.report.output_count);
    EXPECT_TRUE(d.bake_direction.isApprox(Vec3::UnitZ()));
    EXPECT_EQ(load_ply_file(dir / "out.ply").size(), d.count);
    EXPECT_THROW(cmd_decompress(dir / "scene.cgs", dir / "x.ply", Vec3::Zero()), Error);

    const auto pngs = cmd_render(dir / "scene.cgs", dir / "cams.json", dir / "renders");
    ASSERT_EQ(pngs.size(), 2u);
    EXPECT_EQ(pngs[1].filename(), "view_001.png");
    EXPECT_EQ(read_png(pngs[0]).width, 24);

    const auto self = cmd_eval(dir / "scene.ply", dir / "scene.ply", dir / "cams.json");
    EXPECT_DOUBLE_EQ(self[0].l1, 0.0);
    const auto rows = cmd_eval(dir / "scene.ply", dir / "scene.cgs", dir / "cams.json");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_NEAR(rows[0].psnr, r.report.view_psnr[0], 1e-9);
    std::filesystem::remove_all(dir);
}

TEST(Commands, SmallSweep) {
    const SyntheticScene scene = make_toy_scene({300, 0, 2, 24, 24, 4, 4, 9});
    RunConfig rc;
    rc.field_preset = FieldPreset::toy;
    rc.codebook_size = 8;
    rc.stages = 3;
    rc.iters_mask = 40;
    rc.iters_field = 100;
    rc.iters_rvq = 10;
    rc.deterministic = true;
    SweepPoint base;
    base.lambda_mask = rc.lambda_mask;
    base.hash_log2 = hash_log2_of(rc.to_pipeline().field);
    base.stages = rc.stages;
    std::ostringstream log;
    const auto rows = run_sweep(scene.cloud, scene.cameras, rc, sweep_grid(base, 1), &log);
    ASSERT_EQ(rows.size(), 4u);
    for (const auto& r : rows) EXPECT_TRUE(r.ok) << r.error;
    EXPECT_NE(log.str().find("sweep base"), std::string::npos);
    EXPECT_LT(rows[2].bytes, rows[0].bytes);  // half the hash table
    EXPECT_LT(rows[3].bytes, rows[0].bytes);  // one stage fewer
}

}  // namespace
