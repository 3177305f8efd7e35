// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include "gscodec_cli/commands.hpp"

#include <gscodec/error.hpp>
#include <gscodec/metrics.hpp>
#include <gscodec/parallel.hpp>
#include <gscodec/ply.hpp>
#include <gscodec/renderer.hpp>

#include <algorithm>
#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>

namespace gscodec::cli {

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("cannot write " + path.string());
}

bool is_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::array<char, kContainerMagic.size()> head{};
    in.read(head.data(), static_cast<std::streamsize>(head.size()));
    return in.gcount() == static_cast<std::streamsize>(head.size()) && head == kContainerMagic;
}

FieldConfig preset_field(FieldPreset preset) {
    switch (preset) {
    case FieldPreset::real: return FieldConfig::real_scene();
    case FieldPreset::synthetic: return FieldConfig::synthetic_scene();
    case FieldPreset::toy: return toy_field_config();
    }
    throw Error("unknown field preset");
}

}  // namespace

FieldPreset parse_field_preset(const std::string& text) {
    if (text == "real") return FieldPreset::real;
    if (text == "synthetic") return FieldPreset::synthetic;
    if (text == "toy") return FieldPreset::toy;
    throw Error("invalid field: expected real, synthetic or toy, got '" + text + "'");
}

std::string to_string(FieldPreset preset) {
    switch (preset) {
    case FieldPreset::real: return "real";
    case FieldPreset::synthetic: return "synthetic";
    case FieldPreset::toy: return "toy";
    }
    return "?";
}

PipelineConfig RunConfig::to_pipeline() const {
    PipelineConfig p;
    p.use_mask = use_mask;
    p.mask.lambda_mask = lambda_mask;
    p.mask.epsilon = epsilon;
    p.mask.mode = mask_mode;
    p.mask.iterations = iters_mask;
    p.codebook_size = codebook_size;
    p.num_stages = stages;
    p.rvq_iterations = iters_rvq;
    p.field = preset_field(field_preset);
    if (hash_log2) {
        if (*hash_log2 < 3 || *hash_log2 > 30) throw Error("invalid hash_log2: must lie in [3, 30]");
        p.field.max_hashmap = 1u << *hash_log2;
    }
    p.distill.iterations = iters_field;
    p.post.enabled = post_process;
    p.seed = seed;
    if (long_schedule) p.apply_long_schedule();
    p.validate();
    return p;
}

int hash_log2_of(const FieldConfig& field) { return std::bit_width(field.max_hashmap) - 1; }

void apply_runtime(const RunConfig& config) {
    if (config.deterministic) set_thread_count(1);
}

SceneFile load_scene(const std::filesystem::path& path) {
    SceneFile scene;
    if (is_container(path)) scene.decoded = decode_file(read_bytes(path));
    else scene.cloud = load_ply_file(path);
    return scene;
}

std::vector<Image> render_scene(const SceneFile& scene, const std::vector<CameraPose>& cameras,
                                const RenderSettings& settings) {
    std::vector<Image> images;
    images.reserve(cameras.size());
    if (scene.decoded) {
        const DecodedScene& d = *scene.decoded;
        FeatureCache cache;
        if (d.size() > 0) cache = precompute_features(d.positions, d.field);
        for (const CameraPose& pose : cameras)
            images.push_back(render_decoded(d, pose, settings, d.size() > 0 ? &cache : nullptr));
    } else if (scene.cloud) {
        for (const CameraPose& pose : cameras) images.push_back(render_cloud(*scene.cloud, pose, settings));
    }
    return images;
}

PipelineResult cmd_compress(const std::filesystem::path& input, const std::optional<std::filesystem::path>& cameras,
                            const std::filesystem::path& output, const RunConfig& config) {
    const PipelineConfig pipeline = config.to_pipeline();
    apply_runtime(config);
    const GaussianCloud cloud = load_ply_file(input);
    const std::vector<CameraPose> poses = cameras ? load_cameras(*cameras) : std::vector<CameraPose>{};
    PipelineResult result = compress_scene(cloud, poses, pipeline);
    write_bytes(output, result.bytes);
    return result;
}

DecompressReport cmd_decompress(const std::filesystem::path& input, const std::filesystem::path& output,
                                const Vec3& bake_direction) {
    if (!(bake_direction.norm() > 0.0)) throw Error("bake direction must be non-zero");
    const DecodedScene decoded = decode_file(read_bytes(input));
    save_ply_file(decoded.to_cloud(bake_direction.normalized()), output);
    return {decoded.size(), bake_direction.normalized()};
}

std::vector<std::filesystem::path> cmd_render(const std::filesystem::path& scene,
                                              const std::filesystem::path& cameras,
                                              const std::filesystem::path& outdir) {
    const std::vector<CameraPose> poses = load_cameras(cameras);
    const std::vector<Image> images = render_scene(load_scene(scene), poses);
    std::filesystem::create_directories(outdir);
    std::vector<std::filesystem::path> written;
    for (std::size_t v = 0; v < images.size(); ++v) {
        char name[32];
        std::snprintf(name, sizeof(name), "view_%03zu.png", v);
        written.push_back(outdir / name);
        write_png(images[v], written.back());
    }
    return written;
}

std::vector<EvalRow> evaluate_images(const std::vector<Image>& a, const std::vector<Image>& b) {
    if (a.size() != b.size()) throw Error("image lists differ in length");
    std::vector<EvalRow> rows;
    for (std::size_t v = 0; v < a.size(); ++v)
        rows.push_back({v, psnr(a[v], b[v]), ssim(a[v], b[v]), mean_absolute_error(a[v], b[v])});
    return rows;
}

std::vector<EvalRow> cmd_eval(const std::filesystem::path& a, const std::filesystem::path& b,
                              const std::filesystem::path& cameras) {
    const std::vector<CameraPose> poses = load_cameras(cameras);
    return evaluate_images(render_scene(load_scene(a), poses), render_scene(load_scene(b), poses));
}

void write_eval_csv(std::ostream& out, const std::vector<EvalRow>& rows) {
    out << "view,psnr,ssim,l1\n";
    double p = 0.0, s = 0.0, l = 0.0;
    for (const EvalRow& r : rows) {
        out << r.view << ',' << r.psnr << ',' << r.ssim << ',' << r.l1 << '\n';
        p += r.psnr;
        s += r.ssim;
        l += r.l1;
    }
    if (!rows.empty()) {
        const double n = static_cast<double>(rows.size());
        out << "mean," << p / n << ',' << s / n << ',' << l / n << '\n';
    }
}

StorageReport cmd_stats(const std::filesystem::path& input) { return stats(read_bytes(input)); }

SyntheticScene cmd_synth(const std::filesystem::path& ply, const std::filesystem::path& cameras,
                         const ToySceneOptions& options) {
    SyntheticScene scene = make_toy_scene(options);
    save_ply_file(scene.cloud, ply);
    save_cameras(scene.cameras, cameras);
    return scene;
}

}  // namespace gscodec::cli
