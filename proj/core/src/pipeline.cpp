// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include "gscodec/pipeline.hpp"

#include "gscodec/error.hpp"
#include "gscodec/metrics.hpp"
#include "gscodec/rvq.hpp"

#include <json.hpp>

#include <cmath>

namespace gscodec {

namespace {

template <typename F>
auto run_stage(const char* stage, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const std::exception& e) {
        throw Error(std::string("stage '") + stage + "' failed: " + e.what());
    }
}

VectorSet scale_vectors(const GaussianCloud& cloud, ScaleDomain domain) {
    VectorSet out(cloud.size(), 3);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        for (int a = 0; a < 3; ++a)
            out.row(i)[a] = domain == ScaleDomain::log ? std::log(cloud.scales[i][a]) : cloud.scales[i][a];
    return out;
}

VectorSet rotation_vectors(const GaussianCloud& cloud) {
    VectorSet out(cloud.size(), 4);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        for (int a = 0; a < 4; ++a) out.row(i)[a] = cloud.rotations[i][a];
    return out;
}

}  // namespace

void PipelineConfig::apply_long_schedule() {
    mask.iterations = 30000;
    distill.iterations = 30000;
    rvq_iterations = 1000;
}

void PipelineConfig::validate() const {
    auto fail = [](const std::string& key, const std::string& why) { throw Error("invalid " + key + ": " + why); };
    if (!(mask.lambda_mask >= 0.0) || !std::isfinite(mask.lambda_mask)) fail("lambda_mask", "must be a finite value >= 0");
    if (!(mask.epsilon > 0.0 && mask.epsilon < 1.0)) fail("mask_epsilon", "must lie in (0,1)");
    if (mask.prune_interval == 0) fail("prune_interval", "must be positive");
    if (!(mask.lr > 0.0)) fail("mask_lr", "must be positive");
    if (codebook_size < 2 || codebook_size > 65536) fail("codebook_size", "must lie in [2, 65536]");
    if (num_stages < 1 || num_stages > 64) fail("stages", "must lie in [1, 64]");
    if (field.max_hashmap < 8) fail("hash_log2", "hash tables need at least 8 entries");
    try {
        field.validate();
    } catch (const Error& e) {
        fail("field", e.what());
    }
    if (distill.batch_size == 0) fail("field_batch", "must be positive");
    if (!(distill.lr > 0.0)) fail("field_lr", "must be positive");
    if (!(post.hash_prune_threshold >= 0.0)) fail("hash_prune_threshold", "must be >= 0");
}

std::vector<Image> render_references(const GaussianCloud& cloud, std::span<const CameraPose> cameras,
                                     const RenderSettings& settings) {
    std::vector<Image> out;
    out.reserve(cameras.size());
    for (const CameraPose& pose : cameras) out.push_back(render_cloud(cloud, pose, settings));
    return out;
}

MaskStageResult run_mask_stage(const GaussianCloud& cloud, std::span<const CameraPose> cameras,
                               std::span<const Image> references, const PipelineConfig& config) {
    MaskStageResult out;
    if (!config.use_mask || cameras.empty() || cloud.empty()) {
        out.cloud = cloud;
        return out;
    }
    MaskTrainConfig mc = config.mask;
    mc.render = config.render;
    mc.seed = config.seed;
    MaskTrainResult trained = train_mask(cloud, cameras, references, mc);
    out.cloud = std::move(trained.cloud);
    out.trained = true;
    if (!trained.log.empty()) {
        out.final_l_ren = trained.log.back().l_ren;
        out.final_l_m = trained.log.back().l_m;
    }
    out.log = std::move(trained.log);
    return out;
}

PipelineResult compress_masked(const GaussianCloud& input, const MaskStageResult& masked,
                               std::span<const CameraPose> cameras, std::span<const Image> references,
                               const PipelineConfig& config) {
    config.validate();
    PipelineResult result;
    PipelineReport& report = result.report;
    const GaussianCloud& cloud = masked.cloud;
    report.input_count = input.size();
    report.output_count = cloud.size();
    report.mask_trained = masked.trained;
    report.mask_final_l_ren = masked.final_l_ren;
    report.mask_final_l_m = masked.final_l_m;
    report.mask_log = masked.log;
    if (config.use_mask && cameras.empty()) report.warnings.push_back("no cameras given: mask training skipped");
    if (masked.trained && cloud.empty() && !input.empty())
        report.warnings.push_back("every Gaussian was masked out");

    SceneEncodeInput enc;
    enc.positions = cloud.positions;
    enc.opacities = cloud.opacities;
    enc.mask_mode = config.mask.mode;
    enc.scale_domain = config.scale_domain;
    enc.post = config.post;

    RvqTrainResult scale_rvq, rotation_rvq;
    ColorField field;
    if (!cloud.empty()) {
        RvqTrainOptions opts;
        opts.codebook_size = config.codebook_size;
        opts.num_stages = config.num_stages;
        opts.iterations = config.rvq_iterations;
        opts.seed = config.seed;
        run_stage("rvq", [&] {
            scale_rvq = train_rvq(scale_vectors(cloud, config.scale_domain), opts);
            opts.seed = config.seed + 1;
            rotation_rvq = train_rvq(rotation_vectors(cloud), opts);
        });
        report.scale_kmeans_distortion = scale_rvq.kmeans_distortion;
        report.scale_distortion = scale_rvq.final_distortion;
        report.rotation_kmeans_distortion = rotation_rvq.kmeans_distortion;
        report.rotation_distortion = rotation_rvq.final_distortion;
        enc.scale_codec = &scale_rvq.codec;
        enc.scale_indices = &scale_rvq.stream;
        enc.rotation_codec = &rotation_rvq.codec;
        enc.rotation_indices = &rotation_rvq.stream;

        run_stage("field", [&] {
            field = ColorField::initialized(config.field, config.seed);
            DistillConfig dc = config.distill;
            dc.seed = config.seed;
            report.field_final_loss = distill_train(cloud, field, dc, cameras).final_loss;
        });
        enc.field = &field;
    }

    result.bytes = run_stage("container", [&] { return encode_file(enc); });
    report.storage = stats(result.bytes);
    if (!result.bytes.empty() && !input.empty())
        report.input_ratio = static_cast<double>(input.size() * kBaselineBytesPerGaussian) /
                             static_cast<double>(result.bytes.size());

    if (!cameras.empty()) {
        run_stage("evaluate", [&] {
            const DecodedScene decoded = decode_file(result.bytes);
            FeatureCache cache;
            if (decoded.size() > 0) cache = precompute_features(decoded.positions, decoded.field);
            double sum = 0.0;
            for (std::size_t v = 0; v < cameras.size(); ++v) {
                const Image reference =
                    v < references.size() ? references[v] : render_cloud(input, cameras[v], config.render);
                const Image image = render_decoded(decoded, cameras[v], config.render, decoded.size() > 0 ? &cache : nullptr);
                report.view_psnr.push_back(psnr(image, reference));
                sum += report.view_psnr.back();
            }
            report.mean_psnr = sum / static_cast<double>(cameras.size());
        });
    }
    return result;
}

PipelineResult compress_scene(const GaussianCloud& cloud, std::span<const CameraPose> cameras,
                              const PipelineConfig& config) {
    config.validate();
    const std::vector<Image> references = cameras.empty() ? std::vector<Image>{}
                                                          : render_references(cloud, cameras, config.render);
    const MaskStageResult masked =
        run_stage("mask", [&] { return run_mask_stage(cloud, cameras, references, config); });
    return compress_masked(cloud, masked, cameras, references, config);
}

Image render_decoded(const DecodedScene& scene, const CameraPose& pose, const RenderSettings& settings,
                     const FeatureCache* cache) {
    const auto colors = scene.colors(pose.center, cache);
    SplatView view{scene.positions, scene.rotations, scene.scales, scene.opacities, colors, {}};
    return rasterize(view, pose, settings);
}

std::string pipeline_report_json(const PipelineReport& report) {
    nlohmann::json j;
    j["gaussians"] = {{"input", report.input_count}, {"output", report.output_count}};
    j["mask"] = {{"trained", report.mask_trained},
                 {"final_l_ren", report.mask_final_l_ren},
                 {"final_l_m", report.mask_final_l_m}};
    j["rvq"] = {{"scale_kmeans_distortion", report.scale_kmeans_distortion},
                {"scale_distortion", report.scale_distortion},
                {"rotation_kmeans_distortion", report.rotation_kmeans_distortion},
                {"rotation_distortion", report.rotation_distortion}};
    j["field"] = {{"final_loss", report.field_final_loss}};
    j["storage"] = nlohmann::json::parse(storage_report_json(report.storage));
    if (report.input_ratio) j["input_ratio"] = *report.input_ratio;
    else j["input_ratio"] = "n/a";
    if (report.mean_psnr) {
        j["psnr"] = {{"mean", *report.mean_psnr}, {"views", report.view_psnr}};
    }
    j["warnings"] = report.warnings;
    return j.dump(2);
}

}  // namespace gscodec
