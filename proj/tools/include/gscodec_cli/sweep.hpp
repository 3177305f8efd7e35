// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gscodec_cli/commands.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace gscodec::cli {

struct SweepPoint {
    std::string axis;  // "base", "lambda_m", "hash", "stages"
    double lambda_mask = 5e-4;
    int hash_log2 = 19;
    std::uint32_t stages = 6;
};

/// The base point followed, per knob, by `steps` increasingly compact
/// settings: lambda_m doubled, hash size halved, one stage fewer.
std::vector<SweepPoint> sweep_grid(const SweepPoint& base, int steps);

struct SweepRow {
    SweepPoint point;
    bool ok = false;
    std::string error;
    std::size_t n_gaussians = 0;
    std::uint64_t bytes = 0;
    double psnr = 0.0;
    bool on_frontier = false;
};

/// Runs every grid point from the same input. Mask training is shared
/// between points with equal lambda_m. A failing point is logged and the
/// sweep continues.
std::vector<SweepRow> run_sweep(const GaussianCloud& cloud, const std::vector<CameraPose>& cameras,
                                const RunConfig& base, const std::vector<SweepPoint>& grid,
                                std::ostream* log = nullptr);

/// Flags rows no other row beats on both size and PSNR.
void mark_frontier(std::vector<SweepRow>& rows);

/// Columns lambda_m,hash_log2,stages,bytes,psnr,n_gaussians,axis,on_frontier.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool frontier_only = false);

/// True when, along every axis, size never grows as the setting gets more
/// compact (the base row leads each axis).
bool sizes_monotone(const std::vector<SweepRow>& rows);

}  // namespace gscodec::cli
