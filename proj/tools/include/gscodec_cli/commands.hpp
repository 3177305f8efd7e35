// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gscodec/camera.hpp>
#include <gscodec/container.hpp>
#include <gscodec/image.hpp>
#include <gscodec/pipeline.hpp>
#include <gscodec/synthetic.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace gscodec::cli {

/// Hash-grid sizing presets. `real` and `synthetic` are the default
/// settings for real and synthetic scenes; `toy` fits scenes of a few
/// thousand Gaussians.
enum class FieldPreset { real, synthetic, toy };

FieldPreset parse_field_preset(const std::string& text);
std::string to_string(FieldPreset preset);

/// Every user-facing knob.
struct RunConfig {
    double lambda_mask = 5e-4;
    double epsilon = 0.01;
    MaskMode mask_mode = MaskMode::both;
    std::uint32_t codebook_size = 64;
    std::uint32_t stages = 6;
    FieldPreset field_preset = FieldPreset::real;
    std::optional<int> hash_log2;  // overrides the preset's table size
    std::size_t iters_mask = 2000;
    std::size_t iters_field = 5000;
    std::size_t iters_rvq = 1000;
    std::uint64_t seed = 0;
    bool post_process = true;
    bool use_mask = true;
    bool deterministic = false;
    bool long_schedule = false;

    /// Validated pipeline settings; throws gscodec::Error naming the key.
    PipelineConfig to_pipeline() const;
};

/// Effective log2 table size of a pipeline config.
int hash_log2_of(const FieldConfig& field);

/// Applies process-wide settings (single-threaded under `deterministic`).
void apply_runtime(const RunConfig& config);

/// A scene file on disk: a splat PLY or a compressed container.
struct SceneFile {
    std::optional<GaussianCloud> cloud;
    std::optional<DecodedScene> decoded;
};

SceneFile load_scene(const std::filesystem::path& path);
std::vector<Image> render_scene(const SceneFile& scene, const std::vector<CameraPose>& cameras,
                                const RenderSettings& settings = {});

PipelineResult cmd_compress(const std::filesystem::path& input, const std::optional<std::filesystem::path>& cameras,
                            const std::filesystem::path& output, const RunConfig& config);

struct DecompressReport {
    std::size_t count = 0;
    Vec3 bake_direction = Vec3::UnitZ();
};

DecompressReport cmd_decompress(const std::filesystem::path& input, const std::filesystem::path& output,
                                const Vec3& bake_direction = Vec3::UnitZ());

/// Writes view_000.png, view_001.png, ... and returns their paths.
std::vector<std::filesystem::path> cmd_render(const std::filesystem::path& scene,
                                              const std::filesystem::path& cameras,
                                              const std::filesystem::path& outdir);

struct EvalRow {
    std::size_t view = 0;
    double psnr = 0.0;
    double ssim = 0.0;
    double l1 = 0.0;
};

std::vector<EvalRow> evaluate_images(const std::vector<Image>& a, const std::vector<Image>& b);
std::vector<EvalRow> cmd_eval(const std::filesystem::path& a, const std::filesystem::path& b,
                              const std::filesystem::path& cameras);
/// Columns view,psnr,ssim,l1 with a trailing "mean" row.
void write_eval_csv(std::ostream& out, const std::vector<EvalRow>& rows);

StorageReport cmd_stats(const std::filesystem::path& input);

/// Writes a generated toy scene as PLY plus a camera file.
SyntheticScene cmd_synth(const std::filesystem::path& ply, const std::filesystem::path& cameras,
                         const ToySceneOptions& options);

}  // namespace gscodec::cli
