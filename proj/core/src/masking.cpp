// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include "gscodec/masking.hpp"

#include "gscodec/adam.hpp"
#include "gscodec/error.hpp"
#include "gscodec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

namespace gscodec {

std::string to_string(MaskMode mode) {
    switch (mode) {
        case MaskMode::both: return "both";
        case MaskMode::opacity_only: return "opacity_only";
        case MaskMode::scale_only: return "scale_only";
    }
    return "unknown";
}

MaskMode parse_mask_mode(const std::string& text) {
    if (text == "both") return MaskMode::both;
    if (text == "opacity_only" || text == "opacity") return MaskMode::opacity_only;
    if (text == "scale_only" || text == "scale") return MaskMode::scale_only;
    throw Error("unknown mask mode '" + text + "' (expected both, opacity_only or scale_only)");
}

MaskState MaskState::initialized(std::size_t n, double initial_probability, double epsilon, MaskMode mode) {
    if (!(initial_probability > 0.0 && initial_probability < 1.0))
        throw Error("initial mask probability must lie in (0,1)");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error("mask epsilon must lie in (0,1)");
    MaskState state;
    state.logits.assign(n, logit(initial_probability));
    state.epsilon = epsilon;
    state.mode = mode;
    return state;
}

std::vector<double> soft_mask(const MaskState& state) {
    std::vector<double> out(state.size());
    std::transform(state.logits.begin(), state.logits.end(), out.begin(), sigmoid);
    return out;
}

std::vector<double> binary_mask(const MaskState& state) {
    std::vector<double> out(state.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid(state.logits[i]) > state.epsilon ? 1.0 : 0.0;
    return out;
}

std::vector<double> binary_mask_gradient(const MaskState& state) {
    std::vector<double> out(state.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double s = sigmoid(state.logits[i]);
        out[i] = s * (1.0 - s);
    }
    return out;
}

MaskedAttributes apply_mask(const GaussianCloud& cloud, std::span<const double> mask, MaskMode mode) {
    if (mask.size() != cloud.size()) throw Error("mask length does not match the cloud");
    MaskedAttributes out{cloud.scales, cloud.opacities};
    const bool scale = mode != MaskMode::opacity_only;
    const bool opacity = mode != MaskMode::scale_only;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (scale) out.scales[i] = mask[i] * cloud.scales[i];
        if (opacity) out.opacities[i] = mask[i] * cloud.opacities[i];
    }
    return out;
}

MaskedAttributes apply_mask(const GaussianCloud& cloud, const MaskState& state) {
    return apply_mask(cloud, binary_mask(state), state.mode);
}

double masking_loss(const MaskState& state) {
    if (state.logits.empty()) throw Error("masking loss of an empty mask");
    double sum = 0.0;
    for (double m : state.logits) sum += sigmoid(m);
    return sum / static_cast<double>(state.size());
}

std::vector<double> masking_loss_gradient(const MaskState& state) {
    auto grad = binary_mask_gradient(state);
    const double inv_n = 1.0 / static_cast<double>(std::max<std::size_t>(1, state.size()));
    for (double& g : grad) g *= inv_n;
    return grad;
}

std::vector<double> mask_value_gradient(const GaussianCloud& cloud, std::span<const double> mask, MaskMode mode,
                                        const SplatGradients& grads, const CameraPose& pose,
                                        const RenderSettings& settings) {
    const std::size_t n = cloud.size();
    std::vector<double> out(n, 0.0);
    const bool scale = mode != MaskMode::opacity_only;
    const bool opacity = mode != MaskMode::scale_only;
    for (std::size_t i = 0; i < n; ++i) {
        double g = 0.0;
        if (opacity) g += grads.opacity[i] * cloud.opacities[i];
        if (scale && !grads.cov2d[i].isZero(0.0)) {
            // Sigma_2d(M) = M^2 A + lowpass I, so d/dM = 2 M A.
            const auto base = projected_covariance(cloud.positions[i],
                                                   covariance_from(cloud.scales[i], cloud.rotations[i]), pose,
                                                   settings);
            if (base) g += 2.0 * mask[i] * grads.cov2d[i].cwiseProduct(*base).sum();
        }
        out[i] = g;
    }
    return out;
}

PruneResult prune(const GaussianCloud& cloud, const MaskState& state) {
    if (state.size() != cloud.size()) throw Error("mask length does not match the cloud");
    PruneResult result;
    for (std::size_t i = 0; i < state.size(); ++i)
        if (sigmoid(state.logits[i]) > state.epsilon) result.kept.push_back(i);
    result.cloud = cloud.select(result.kept);
    result.state.epsilon = state.epsilon;
    result.state.mode = state.mode;
    result.state.logits.reserve(result.kept.size());
    for (std::size_t k : result.kept) result.state.logits.push_back(state.logits[k]);
    result.all_masked = result.kept.empty() && !cloud.empty();
    return result;
}

Image render_masked(const GaussianCloud& cloud, std::span<const double> mask, MaskMode mode,
                    const CameraPose& pose, const RenderSettings& settings) {
    const MaskedAttributes masked = apply_mask(cloud, mask, mode);
    const auto colors = sh_colors(cloud, pose);
    SplatView view{cloud.positions, cloud.rotations, masked.scales, masked.opacities, colors, {}};
    return rasterize(view, pose, settings);
}

MaskTrainResult train_mask(const GaussianCloud& cloud, std::span<const CameraPose> views,
                           std::span<const Image> references, const MaskTrainConfig& config) {
    if (views.empty()) throw Error("mask training needs at least one view");
    if (views.size() != references.size()) throw Error("mask training needs one reference image per view");
    if (!(config.lambda_mask >= 0.0)) throw Error("lambda_mask must be non-negative");
    if (config.prune_interval == 0) throw Error("prune_interval must be positive");

    MaskTrainResult result;
    result.cloud = cloud;
    result.state = MaskState::initialized(cloud.size(), config.initial_probability, config.epsilon, config.mode);
    result.kept.resize(cloud.size());
    std::iota(result.kept.begin(), result.kept.end(), std::size_t{0});

    Adam mask_opt(cloud.size(), Adam::Options{config.lr});
    Adam opacity_opt(cloud.size(), Adam::Options{0.05});
    std::vector<double> opacity_logits;
    if (config.train_opacity) {
        opacity_logits.resize(cloud.size());
        for (std::size_t i = 0; i < cloud.size(); ++i)
            opacity_logits[i] = logit(std::clamp(cloud.opacities[i], 1e-6, 1.0 - 1e-6));
    }

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> schedule(views.size());
    std::iota(schedule.begin(), schedule.end(), std::size_t{0});
    std::size_t cursor = schedule.size();

    auto do_prune = [&] {
        PruneResult pruned = prune(result.cloud, result.state);
        if (pruned.kept.size() == result.cloud.size()) return;
        mask_opt.compact(pruned.kept);
        if (config.train_opacity) {
            opacity_opt.compact(pruned.kept);
            std::vector<double> kept_logits;
            kept_logits.reserve(pruned.kept.size());
            for (std::size_t k : pruned.kept) kept_logits.push_back(opacity_logits[k]);
            opacity_logits = std::move(kept_logits);
        }
        std::vector<std::size_t> kept;
        kept.reserve(pruned.kept.size());
        for (std::size_t k : pruned.kept) kept.push_back(result.kept[k]);
        result.kept = std::move(kept);
        result.cloud = std::move(pruned.cloud);
        result.state = std::move(pruned.state);
    };

    RenderTape tape;  // reused so its buffers keep their capacity
    for (std::size_t it = 1; it <= config.iterations && !result.cloud.empty(); ++it) {
        if (cursor == schedule.size()) {
            std::shuffle(schedule.begin(), schedule.end(), rng);
            cursor = 0;
        }
        const std::size_t v = schedule[cursor++];
        const CameraPose& pose = views[v];
        GaussianCloud& current = result.cloud;
        MaskState& state = result.state;

        const auto mask = binary_mask(state);
        const MaskedAttributes masked = apply_mask(current, mask, state.mode);
        const auto colors = sh_colors(current, pose);
        SplatView view{current.positions, current.rotations, masked.scales, masked.opacities, colors,
                       current.opacities};
        const Image image = rasterize(view, pose, config.render, &tape);
        const LossResult loss = render_loss(image, references[v], config.ssim_lambda);
        const double l_m = masking_loss(state);
        const double total = loss.value + config.lambda_mask * l_m;
        if (!std::isfinite(total)) throw TrainingError("non-finite mask training loss", it);
        result.log.push_back({it, current.size(), loss.value, l_m});

        const SplatGradients grads = backward(loss.gradient, view, tape);
        const auto d_mask = mask_value_gradient(current, mask, state.mode, grads, pose, config.render);
        const auto d_sigma = binary_mask_gradient(state);
        const double inv_n = 1.0 / static_cast<double>(current.size());
        std::vector<double> d_logits(current.size());
        for (std::size_t i = 0; i < d_logits.size(); ++i)
            d_logits[i] = d_sigma[i] * (d_mask[i] + config.lambda_mask * inv_n);

        if (config.train_opacity) {
            const bool opacity_masked = state.mode != MaskMode::scale_only;
            std::vector<double> d_opacity(current.size());
            for (std::size_t i = 0; i < d_opacity.size(); ++i) {
                const double o = current.opacities[i];
                const double chain = opacity_masked ? mask[i] : 1.0;
                d_opacity[i] = grads.opacity[i] * chain * o * (1.0 - o);
            }
            opacity_opt.step(opacity_logits, d_opacity);
            for (std::size_t i = 0; i < d_opacity.size(); ++i) current.opacities[i] = sigmoid(opacity_logits[i]);
        }
        mask_opt.step(state.logits, d_logits);

        if (it % config.prune_interval == 0 || it == config.iterations) do_prune();
    }
    return result;
}

void write_mask_log_csv(std::ostream& out, std::span<const MaskLogRow> log) {
    out << "iteration,n_gaussians,l_ren,l_m\n";
    out.precision(10);
    for (const MaskLogRow& row : log)
        out << row.iteration << ',' << row.n_gaussians << ',' << row.l_ren << ',' << row.l_m << '\n';
}

}  // namespace gscodec
