// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gscodec/camera.hpp"
#include "gscodec/gaussian_cloud.hpp"
#include "gscodec/image.hpp"
#include "gscodec/renderer.hpp"

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace gscodec {

enum class MaskMode : std::uint8_t { both = 0, opacity_only = 1, scale_only = 2 };

std::string to_string(MaskMode mode);
MaskMode parse_mask_mode(const std::string& text);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// Learnable per-Gaussian mask logits with a fixed binarization threshold.
struct MaskState {
    std::vector<double> logits;
    double epsilon = 0.01;
    MaskMode mode = MaskMode::both;

    std::size_t size() const { return logits.size(); }

    /// All logits set to logit(initial_probability).
    static MaskState initialized(std::size_t n, double initial_probability = 0.99,
                                 double epsilon = 0.01, MaskMode mode = MaskMode::both);
};

/// sigma(m_n).
std::vector<double> soft_mask(const MaskState& state);

/// Forward values 1[sigma(m_n) > epsilon], exactly 0 or 1.
std::vector<double> binary_mask(const MaskState& state);

/// d M_n / d m_n under the straight-through estimator: sigma'(m_n).
std::vector<double> binary_mask_gradient(const MaskState& state);

struct MaskedAttributes {
    std::vector<Vec3> scales;
    std::vector<double> opacities;
};

/// s_hat = M s and/or o_hat = M o depending on the mode. `mask` may hold any
/// real values (the finite-difference oracle feeds non-binary ones).
MaskedAttributes apply_mask(const GaussianCloud& cloud, std::span<const double> mask, MaskMode mode);
MaskedAttributes apply_mask(const GaussianCloud& cloud, const MaskState& state);

/// (1/N) sum sigma(m_n). Throws when the state is empty.
double masking_loss(const MaskState& state);

/// d L_m / d m_n = sigma'(m_n) / N.
std::vector<double> masking_loss_gradient(const MaskState& state);

/// Chains renderer gradients into d loss / d M_n through s_hat and o_hat.
std::vector<double> mask_value_gradient(const GaussianCloud& cloud, std::span<const double> mask,
                                        MaskMode mode, const SplatGradients& grads,
                                        const CameraPose& pose, const RenderSettings& settings);

struct PruneResult {
    GaussianCloud cloud;
    MaskState state;
    std::vector<std::size_t> kept;
    bool all_masked = false;
};

/// Keeps the Gaussians with M_n = 1; logits are compacted alongside.
PruneResult prune(const GaussianCloud& cloud, const MaskState& state);

/// Renders the cloud with masked attributes and SH colors.
Image render_masked(const GaussianCloud& cloud, std::span<const double> mask, MaskMode mode,
                    const CameraPose& pose, const RenderSettings& settings);

struct MaskTrainConfig {
    double lambda_mask = 5e-4;
    double epsilon = 0.01;
    MaskMode mode = MaskMode::both;
    std::size_t prune_interval = 500;
    double lr = 1e-2;
    std::size_t iterations = 2000;
    std::uint64_t seed = 0;
    double initial_probability = 0.99;
    double ssim_lambda = 0.2;
    bool train_opacity = false;
    RenderSettings render{};
};

struct MaskLogRow {
    std::size_t iteration;
    std::size_t n_gaussians;
    double l_ren;
    double l_m;
};

struct MaskTrainResult {
    MaskState state;                 // logits of the surviving Gaussians
    GaussianCloud cloud;             // pruned cloud
    std::vector<std::size_t> kept;   // indices into the input cloud
    std::vector<MaskLogRow> log;
};

/// Minimizes L_ren + lambda_mask * L_m over the mask logits, pruning masked
/// Gaussians every prune_interval iterations and once more at the end.
/// Views are visited in a seeded per-epoch shuffle. Throws TrainingError on a
/// non-finite loss.
MaskTrainResult train_mask(const GaussianCloud& cloud, std::span<const CameraPose> views,
                           std::span<const Image> references, const MaskTrainConfig& config);

void write_mask_log_csv(std::ostream& out, std::span<const MaskLogRow> log);

}  // namespace gscodec
