// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include "gscodec_cli/sweep.hpp"

#include <gscodec/error.hpp>

#include <cmath>
#include <map>

namespace gscodec::cli {

std::vector<SweepPoint> sweep_grid(const SweepPoint& base, int steps) {
    std::vector<SweepPoint> grid{base};
    grid.front().axis = "base";
    for (int k = 1; k <= steps; ++k) {
        SweepPoint p = base;
        p.axis = "lambda_m";
        p.lambda_mask = base.lambda_mask * std::ldexp(1.0, k);
        grid.push_back(p);
    }
    for (int k = 1; k <= steps && base.hash_log2 - k >= 3; ++k) {
        SweepPoint p = base;
        p.axis = "hash";
        p.hash_log2 = base.hash_log2 - k;
        grid.push_back(p);
    }
    for (int k = 1; k <= steps && static_cast<int>(base.stages) - k >= 1; ++k) {
        SweepPoint p = base;
        p.axis = "stages";
        p.stages = base.stages - static_cast<std::uint32_t>(k);
        grid.push_back(p);
    }
    return grid;
}

std::vector<SweepRow> run_sweep(const GaussianCloud& cloud, const std::vector<CameraPose>& cameras,
                                const RunConfig& base, const std::vector<SweepPoint>& grid, std::ostream* log) {
    apply_runtime(base);
    const RenderSettings settings{};
    const std::vector<Image> references = render_references(cloud, cameras, settings);
    std::map<double, MaskStageResult> masks;
    std::vector<SweepRow> rows;
    for (const SweepPoint& point : grid) {
        SweepRow row;
        row.point = point;
        try {
            RunConfig rc = base;
            rc.lambda_mask = point.lambda_mask;
            rc.hash_log2 = point.hash_log2;
            rc.stages = point.stages;
            const PipelineConfig pc = rc.to_pipeline();
            auto found = masks.find(point.lambda_mask);
            if (found == masks.end())
                found = masks.emplace(point.lambda_mask, run_mask_stage(cloud, cameras, references, pc)).first;
            const PipelineResult result = compress_masked(cloud, found->second, cameras, references, pc);
            row.ok = true;
            row.n_gaussians = result.report.output_count;
            row.bytes = result.bytes.size();
            row.psnr = result.report.mean_psnr.value_or(0.0);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        if (log) {
            *log << "sweep " << point.axis << " lambda_m=" << point.lambda_mask << " hash_log2=" << point.hash_log2
                 << " stages=" << point.stages;
            if (row.ok) *log << " bytes=" << row.bytes << " psnr=" << row.psnr << '\n';
            else *log << " failed: " << row.error << '\n';
        }
        rows.push_back(std::move(row));
    }
    mark_frontier(rows);
    return rows;
}

void mark_frontier(std::vector<SweepRow>& rows) {
    for (SweepRow& r : rows) {
        r.on_frontier = r.ok;
        if (!r.ok) continue;
        for (const SweepRow& o : rows) {
            if (!o.ok || &o == &r) continue;
            const bool no_worse = o.bytes <= r.bytes && o.psnr >= r.psnr;
            const bool better = o.bytes < r.bytes || o.psnr > r.psnr;
            if (no_worse && better) {
                r.on_frontier = false;
                break;
            }
        }
    }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool frontier_only) {
    out << "lambda_m,hash_log2,stages,bytes,psnr,n_gaussians,axis,on_frontier\n";
    for (const SweepRow& r : rows) {
        if (!r.ok || (frontier_only && !r.on_frontier)) continue;
        out << r.point.lambda_mask << ',' << r.point.hash_log2 << ',' << r.point.stages << ',' << r.bytes << ','
            << r.psnr << ',' << r.n_gaussians << ',' << r.point.axis << ',' << (r.on_frontier ? 1 : 0) << '\n';
    }
}

bool sizes_monotone(const std::vector<SweepRow>& rows) {
    const SweepRow* base = nullptr;
    for (const SweepRow& r : rows)
        if (r.point.axis == "base" && r.ok) base = &r;
    if (!base) return false;
    std::map<std::string, std::uint64_t> last;
    for (const SweepRow& r : rows) {
        if (r.point.axis == "base") continue;
        if (!r.ok) return false;
        const auto it = last.try_emplace(r.point.axis, base->bytes).first;
        if (r.bytes > it->second) return false;
        it->second = r.bytes;
    }
    return true;
}

}  // namespace gscodec::cli
