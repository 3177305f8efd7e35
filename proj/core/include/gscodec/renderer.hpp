// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gscodec/camera.hpp"
#include "gscodec/gaussian_cloud.hpp"
#include "gscodec/image.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace gscodec {

struct RenderSettings {
    double near_clip = 0.01;
    double alpha_cutoff = 1.0 / 255.0;
    double transmittance_floor = 1e-4;
    double alpha_max = 0.99;
    /// Added to the diagonal of every projected covariance, in pixel^2.
    double lowpass = 0.3;
    Vec3 background = Vec3::Zero();
};

/// Per-Gaussian inputs to the rasterizer. `scales` and `opacities` are the
/// values after masking; `colors` are already resolved for the view.
///
/// `record_opacities` (optional) holds the unmasked opacities. When given,
/// a Gaussian whose masked alpha falls below the cutoff while its unmasked
/// alpha would not is recorded in the tape with alpha 0: the image is
/// unchanged, but backward() still reports d(loss)/d(opacity) for it.
struct SplatView {
    std::span<const Vec3> positions;
    std::span<const Vec4> rotations;
    std::span<const Vec3> scales;
    std::span<const double> opacities;
    std::span<const Vec3> colors;
    std::span<const double> record_opacities;

    std::size_t size() const { return positions.size(); }
};

struct Projection {
    Vec2 mean = Vec2::Zero();
    /// Screen-space covariance including the low-pass term.
    Mat2 cov = Mat2::Identity();
    Mat2 conic = Mat2::Identity();
    double depth = 0.0;
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive pixel bounds, clipped
};

/// J W Sigma W^T J^T for the Gaussian center, without the low-pass term.
/// Returns nullopt when the center is behind the near clip plane.
std::optional<Mat2> projected_covariance(const Vec3& position, const Mat3& covariance,
                                         const CameraPose& pose, const RenderSettings& settings);

/// EWA projection of one Gaussian. nullopt when culled by the near plane,
/// when its 3-sigma footprint misses the image, or when the covariance is
/// singular.
std::optional<Projection> project_gaussian(const Vec3& position, const Vec3& scale,
                                           const Vec4& rotation, const CameraPose& pose,
                                           const RenderSettings& settings);

/// Per-pixel blend lists recorded by rasterize(); consumed by backward().
struct RenderTape {
    struct Entry {
        std::uint32_t pixel;
        double alpha;          // alpha used for blending (0 for recorded masked Gaussians)
        double transmittance;  // T before this Gaussian
        double falloff;        // exp(-0.5 d^T conic d)
        bool clamped;          // alpha hit alpha_max
    };

    int width = 0;
    int height = 0;
    Vec3 background = Vec3::Zero();
    std::vector<std::size_t> order;            // Gaussians in blend order
    std::vector<std::size_t> offsets;          // order.size() + 1 offsets into entries
    std::vector<Entry> entries;
    std::vector<Projection> projections;       // indexed by Gaussian
    std::vector<double> final_transmittance;   // per pixel
};

struct RenderStats {
    std::size_t culled = 0;
    std::size_t singular = 0;
    std::size_t blended = 0;
};

/// Front-to-back alpha blending with a global stable depth sort (ties by index).
Image rasterize(const SplatView& view, const CameraPose& pose, const RenderSettings& settings,
                RenderTape* tape = nullptr, RenderStats* stats = nullptr);

/// Reverse-mode gradients of a scalar loss through the blend. Geometry
/// gradients other than the projected covariance are not produced.
struct SplatGradients {
    std::vector<double> opacity;   // d loss / d masked opacity
    std::vector<Vec3> color;       // d loss / d rgb
    std::vector<Mat2> cov2d;       // d loss / d screen covariance (full matrix)
};

SplatGradients backward(const Image& loss_gradient, const SplatView& view, const RenderTape& tape);

/// Per-Gaussian rgb for a view from SH, with d = normalize(p - camera center).
std::vector<Vec3> sh_colors(const GaussianCloud& cloud, const CameraPose& pose);

/// Convenience: render a cloud with SH colors and no mask.
Image render_cloud(const GaussianCloud& cloud, const CameraPose& pose, const RenderSettings& settings);

}  // namespace gscodec
