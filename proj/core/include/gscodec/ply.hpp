// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gscodec/gaussian_cloud.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace gscodec {

/// Reads a binary little-endian splat PLY (x y z nx ny nz f_dc_* f_rest_*
/// opacity scale_* rot_*, all float32). Stored logits and log-scales are
/// activated; quaternions are normalized and sign-canonicalized.
GaussianCloud load_ply(std::span<const std::uint8_t> bytes);
GaussianCloud load_ply_file(const std::filesystem::path& path);

struct PlySaveReport {
    /// Gaussians whose opacity had to be clamped into [1e-6, 1 - 1e-6].
    std::size_t clamped_opacities = 0;
};

/// Writes the inverse activations (logit, log) so load_ply(save_ply(c)) == c.
std::vector<std::uint8_t> save_ply(const GaussianCloud& cloud, PlySaveReport* report = nullptr);
void save_ply_file(const GaussianCloud& cloud, const std::filesystem::path& path,
                   PlySaveReport* report = nullptr);

}  // namespace gscodec
