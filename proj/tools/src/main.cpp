// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include "gscodec_cli/commands.hpp"
#include "gscodec_cli/sweep.hpp"

#include <gscodec/error.hpp>
#include <gscodec/masking.hpp>
#include <gscodec/ply.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace gscodec;
using namespace gscodec::cli;

struct ConfigFlags {
    RunConfig config;
    std::string mask_mode = "both";
    std::string field = "real";
    int hash_log2 = 0;
    bool no_pp = false;
    bool no_mask = false;

    void attach(CLI::App* app) {
        app->add_option("--lambda-mask", config.lambda_mask, "Masking loss weight")->capture_default_str();
        app->add_option("--epsilon", config.epsilon, "Mask threshold")->capture_default_str();
        app->add_option("--mask-mode", mask_mode, "opacity, scale or both")->capture_default_str();
        app->add_option("--codebook-size", config.codebook_size, "R-VQ codebook size")->capture_default_str();
        app->add_option("--stages", config.stages, "R-VQ stages")->capture_default_str();
        app->add_option("--field", field, "Hash grid preset: real, synthetic or toy")->capture_default_str();
        app->add_option("--hash-log2", hash_log2, "log2 of the hash table size (overrides the preset)");
        app->add_option("--iters-mask", config.iters_mask, "Mask training iterations")->capture_default_str();
        app->add_option("--iters-field", config.iters_field, "Field distillation iterations")->capture_default_str();
        app->add_option("--iters-rvq", config.iters_rvq, "R-VQ refinement iterations")->capture_default_str();
        app->add_option("--seed", config.seed, "Random seed")->capture_default_str();
        app->add_flag("--no-pp", no_pp, "Skip quantization, hash pruning and Huffman coding");
        app->add_flag("--no-mask", no_mask, "Skip mask training");
        app->add_flag("--deterministic", config.deterministic, "Single-threaded, reproducible run");
        app->add_flag("--long-schedule", config.long_schedule, "30K-iteration mask and field schedule");
    }

    RunConfig resolve() {
        RunConfig c = config;
        c.mask_mode = parse_mask_mode(mask_mode);
        c.field_preset = parse_field_preset(field);
        if (hash_log2 != 0) c.hash_log2 = hash_log2;
        c.post_process = !no_pp;
        c.use_mask = !no_mask;
        return c;
    }
};

Vec3 parse_direction(const std::string& text) {
    Vec3 d;
    if (std::sscanf(text.c_str(), "%lf,%lf,%lf", &d[0], &d[1], &d[2]) != 3)
        throw Error("invalid bake direction '" + text + "': expected x,y,z");
    return d;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compact 3D Gaussian scene codec"};
    app.require_subcommand(1);

    ConfigFlags compress_flags;
    std::string c_input, c_cameras, c_output, c_report;
    auto* compress = app.add_subcommand("compress", "Compress a splat PLY into a .cgs container");
    compress->add_option("input", c_input, "Input PLY")->required();
    compress->add_option("-o,--output", c_output, "Output container")->required();
    compress->add_option("--cameras", c_cameras, "Camera JSON (enables mask training and PSNR)");
    compress->add_option("--report", c_report, "JSON report path (default stdout)");
    compress_flags.attach(compress);

    std::string d_input, d_output, d_dir = "0,0,1";
    auto* decompress = app.add_subcommand("decompress", "Export a container as a degree-0 PLY");
    decompress->add_option("input", d_input, "Input container")->required();
    decompress->add_option("-o,--output", d_output, "Output PLY")->required();
    decompress->add_option("--bake-dir", d_dir, "View direction used to bake colors")->capture_default_str();

    std::string r_scene, r_cameras, r_outdir;
    auto* render = app.add_subcommand("render", "Render a PLY or container to PNGs");
    render->add_option("scene", r_scene, "PLY or container")->required();
    render->add_option("--cameras", r_cameras, "Camera JSON")->required();
    render->add_option("-o,--outdir", r_outdir, "Output directory")->required();

    std::string e_a, e_b, e_cameras, e_output;
    auto* eval = app.add_subcommand("eval", "Compare two scenes view by view (PSNR, SSIM, L1)");
    eval->add_option("a", e_a, "Reference PLY or container")->required();
    eval->add_option("b", e_b, "Test PLY or container")->required();
    eval->add_option("--cameras", e_cameras, "Camera JSON")->required();
    eval->add_option("-o,--output", e_output, "CSV path (default stdout)");

    std::string s_input;
    auto* stats_cmd = app.add_subcommand("stats", "Per-channel storage of a container");
    stats_cmd->add_option("input", s_input, "Input container")->required();

    ConfigFlags sweep_flags;
    std::string w_input, w_cameras, w_output;
    int w_steps = 3;
    bool w_frontier = false;
    auto* sweep = app.add_subcommand("sweep", "Rate-distortion sweep over lambda_m, hash size and stages");
    sweep->add_option("input", w_input, "Input PLY")->required();
    sweep->add_option("--cameras", w_cameras, "Camera JSON")->required();
    sweep->add_option("-o,--output", w_output, "CSV path (default stdout)");
    sweep->add_option("--steps", w_steps, "Settings per knob beyond the base point")->capture_default_str();
    sweep->add_flag("--frontier-only", w_frontier, "Write only rate-distortion frontier rows");
    sweep_flags.attach(sweep);

    ToySceneOptions toy;
    std::string y_ply, y_cameras;
    int y_size = toy.width;
    auto* synth = app.add_subcommand("synth", "Write a generated toy scene and its cameras");
    synth->add_option("ply", y_ply, "Output PLY")->required();
    synth->add_option("--cameras", y_cameras, "Output camera JSON")->required();
    synth->add_option("--count", toy.count, "Visible Gaussians")->capture_default_str();
    synth->add_option("--hidden", toy.hidden, "Extra fully transparent Gaussians")->capture_default_str();
    synth->add_option("--views", toy.views, "Cameras on the ring")->capture_default_str();
    synth->add_option("--size", y_size, "Image width and height")->capture_default_str();
    synth->add_option("--seed", toy.seed, "Random seed")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*compress) {
            const RunConfig config = compress_flags.resolve();
            const std::optional<std::filesystem::path> cams =
                c_cameras.empty() ? std::nullopt : std::optional<std::filesystem::path>(c_cameras);
            const PipelineResult result = cmd_compress(c_input, cams, c_output, config);
            for (const std::string& w : result.report.warnings) std::cerr << "warning: " << w << '\n';
            write_text(c_report, pipeline_report_json(result.report) + "\n");
        } else if (*decompress) {
            const DecompressReport r = cmd_decompress(d_input, d_output, parse_direction(d_dir));
            nlohmann::json j;
            j["count"] = r.count;
            j["bake_direction"] = {r.bake_direction.x(), r.bake_direction.y(), r.bake_direction.z()};
            std::cout << j.dump(2) << '\n';
        } else if (*render) {
            for (const auto& path : cmd_render(r_scene, r_cameras, r_outdir)) std::cout << path.string() << '\n';
        } else if (*eval) {
            std::ostringstream csv;
            write_eval_csv(csv, cmd_eval(e_a, e_b, e_cameras));
            write_text(e_output, csv.str());
        } else if (*stats_cmd) {
            std::cout << storage_report_json(cmd_stats(s_input)) << '\n';
        } else if (*sweep) {
            const RunConfig config = sweep_flags.resolve();
            const PipelineConfig base = config.to_pipeline();
            SweepPoint origin;
            origin.lambda_mask = config.lambda_mask;
            origin.hash_log2 = hash_log2_of(base.field);
            origin.stages = config.stages;
            const GaussianCloud cloud = load_ply_file(w_input);
            const std::vector<CameraPose> cameras = load_cameras(w_cameras);
            const auto rows = run_sweep(cloud, cameras, config, sweep_grid(origin, w_steps), &std::cerr);
            std::ostringstream csv;
            write_sweep_csv(csv, rows, w_frontier);
            write_text(w_output, csv.str());
        } else if (*synth) {
            toy.width = toy.height = y_size;
            const SyntheticScene scene = cmd_synth(y_ply, y_cameras, toy);
            std::cout << scene.cloud.size() << " Gaussians, " << scene.cameras.size() << " cameras\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
