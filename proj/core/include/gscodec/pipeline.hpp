// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gscodec/camera.hpp"
#include "gscodec/color_field.hpp"
#include "gscodec/container.hpp"
#include "gscodec/gaussian_cloud.hpp"
#include "gscodec/image.hpp"
#include "gscodec/masking.hpp"
#include "gscodec/renderer.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gscodec {

/// Every knob of the compression pipeline.
struct PipelineConfig {
    bool use_mask = true;
    MaskTrainConfig mask{};
    std::uint32_t codebook_size = 64;
    std::uint32_t num_stages = 6;
    std::size_t rvq_iterations = 1000;
    ScaleDomain scale_domain = ScaleDomain::linear;
    FieldConfig field = FieldConfig::real_scene();
    DistillConfig distill{};
    PostProcessFlags post{true, 0.1};
    std::uint64_t seed = 0;
    RenderSettings render{};

    /// Full 30K-iteration schedule for mask and field training.
    void apply_long_schedule();

    /// Throws gscodec::Error naming the offending key.
    void validate() const;
};

struct PipelineReport {
    std::size_t input_count = 0;
    std::size_t output_count = 0;
    bool mask_trained = false;
    double mask_final_l_ren = 0.0;
    double mask_final_l_m = 0.0;
    double scale_kmeans_distortion = 0.0;
    double scale_distortion = 0.0;
    double rotation_kmeans_distortion = 0.0;
    double rotation_distortion = 0.0;
    double field_final_loss = 0.0;
    StorageReport storage{};
    /// 59 x 4 bytes per input Gaussian over the file size.
    std::optional<double> input_ratio;
    std::vector<double> view_psnr;
    std::optional<double> mean_psnr;
    std::vector<std::string> warnings;
    std::vector<MaskLogRow> mask_log;
};

struct PipelineResult {
    std::vector<std::uint8_t> bytes;
    PipelineReport report;
};

/// Precomputed intermediate results that compress_scene can reuse.
struct MaskStageResult {
    GaussianCloud cloud;
    bool trained = false;
    double final_l_ren = 0.0;
    double final_l_m = 0.0;
    std::vector<MaskLogRow> log;
};

/// Renders of the unmasked input from every camera.
std::vector<Image> render_references(const GaussianCloud& cloud, std::span<const CameraPose> cameras,
                                     const RenderSettings& settings);

MaskStageResult run_mask_stage(const GaussianCloud& cloud, std::span<const CameraPose> cameras,
                               std::span<const Image> references, const PipelineConfig& config);

/// mask -> prune -> R-VQ -> field distillation -> optional post-processing
/// -> container. Without cameras the mask stage is skipped with a warning
/// and no PSNR is reported.
PipelineResult compress_scene(const GaussianCloud& cloud, std::span<const CameraPose> cameras,
                              const PipelineConfig& config);

/// Same, starting from a finished mask stage.
PipelineResult compress_masked(const GaussianCloud& input, const MaskStageResult& masked,
                               std::span<const CameraPose> cameras, std::span<const Image> references,
                               const PipelineConfig& config);

/// Renders a decoded scene with field colors.
Image render_decoded(const DecodedScene& scene, const CameraPose& pose, const RenderSettings& settings,
                     const FeatureCache* cache = nullptr);

std::string pipeline_report_json(const PipelineReport& report);

}  // namespace gscodec
