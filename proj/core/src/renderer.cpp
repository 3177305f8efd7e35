// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include "gscodec/renderer.hpp"

#include "gscodec/error.hpp"
#include "gscodec/parallel.hpp"
#include "gscodec/sh.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>

namespace gscodec {

namespace {

enum class ProjectStatus { ok, culled, singular };

ProjectStatus project_impl(const Vec3& position, const Mat3& covariance, const CameraPose& pose,
                           const RenderSettings& settings, Projection& out) {
    const Vec3 t = pose.to_camera(position);
    if (!(t.z() > settings.near_clip)) return ProjectStatus::culled;
    const double z = t.z(), inv_z = 1.0 / z;
    Eigen::Matrix<double, 2, 3> jacobian;
    jacobian << pose.fx * inv_z, 0.0, -pose.fx * t.x() * inv_z * inv_z,
                0.0, pose.fy * inv_z, -pose.fy * t.y() * inv_z * inv_z;
    const Eigen::Matrix<double, 2, 3> m = jacobian * pose.rotation;
    Mat2 cov = m * covariance * m.transpose();
    cov(0, 1) = cov(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
    cov(0, 0) += settings.lowpass;
    cov(1, 1) += settings.lowpass;

    const double det = cov.determinant();
    if (!(det > 0.0) || !cov.allFinite()) return ProjectStatus::singular;

    out.mean = Vec2(pose.fx * t.x() * inv_z + pose.cx, pose.fy * t.y() * inv_z + pose.cy);
    out.cov = cov;
    out.conic = Mat2{{cov(1, 1) / det, -cov(0, 1) / det}, {-cov(0, 1) / det, cov(0, 0) / det}};
    out.depth = z;

    const double mid = 0.5 * (cov(0, 0) + cov(1, 1));
    const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
    const double radius = std::ceil(3.0 * std::sqrt(lambda_max));
    const double fx0 = std::floor(out.mean.x() - radius), fx1 = std::ceil(out.mean.x() + radius);
    const double fy0 = std::floor(out.mean.y() - radius), fy1 = std::ceil(out.mean.y() + radius);
    if (fx1 < 0.0 || fy1 < 0.0 || fx0 > pose.width - 1 || fy0 > pose.height - 1) return ProjectStatus::culled;
    out.x0 = static_cast<int>(std::max(0.0, fx0));
    out.y0 = static_cast<int>(std::max(0.0, fy0));
    out.x1 = static_cast<int>(std::min<double>(pose.width - 1, fx1));
    out.y1 = static_cast<int>(std::min<double>(pose.height - 1, fy1));
    return ProjectStatus::ok;
}

}  // namespace

std::optional<Mat2> projected_covariance(const Vec3& position, const Mat3& covariance, const CameraPose& pose,
                                         const RenderSettings& settings) {
    const Vec3 t = pose.to_camera(position);
    if (!(t.z() > settings.near_clip)) return std::nullopt;
    const double inv_z = 1.0 / t.z();
    Eigen::Matrix<double, 2, 3> jacobian;
    jacobian << pose.fx * inv_z, 0.0, -pose.fx * t.x() * inv_z * inv_z,
                0.0, pose.fy * inv_z, -pose.fy * t.y() * inv_z * inv_z;
    const Eigen::Matrix<double, 2, 3> m = jacobian * pose.rotation;
    Mat2 cov = m * covariance * m.transpose();
    cov(0, 1) = cov(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
    return cov;
}

std::optional<Projection> project_gaussian(const Vec3& position, const Vec3& scale, const Vec4& rotation,
                                           const CameraPose& pose, const RenderSettings& settings) {
    Projection p;
    if (project_impl(position, covariance_from(scale, rotation), pose, settings, p) != ProjectStatus::ok)
        return std::nullopt;
    return p;
}

Image rasterize(const SplatView& view, const CameraPose& pose, const RenderSettings& settings, RenderTape* tape,
                RenderStats* stats) {
    const std::size_t n = view.size();
    if (view.rotations.size() != n || view.scales.size() != n || view.opacities.size() != n ||
        view.colors.size() != n || (!view.record_opacities.empty() && view.record_opacities.size() != n)) {
        throw Error("splat view arrays disagree on the Gaussian count");
    }
    const int width = pose.width, height = pose.height;
    const std::size_t pixels = static_cast<std::size_t>(width) * height;

    std::vector<Projection> projections(n);
    std::vector<ProjectStatus> status(n, ProjectStatus::culled);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            status[i] = project_impl(view.positions[i], covariance_from(view.scales[i], view.rotations[i]), pose,
                                     settings, projections[i]);
    });

    std::vector<std::size_t> order;
    order.reserve(n);
    RenderStats local;
    for (std::size_t i = 0; i < n; ++i) {
        if (status[i] == ProjectStatus::ok) order.push_back(i);
        else if (status[i] == ProjectStatus::culled) ++local.culled;
        else ++local.singular;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (projections[a].depth != projections[b].depth) return projections[a].depth < projections[b].depth;
        return a < b;
    });

    Image image(width, height);
    std::vector<double> transmittance(pixels, 1.0);
    std::vector<std::uint8_t> done(pixels, 0);
    const bool record = tape != nullptr && !view.record_opacities.empty();
    if (tape) {
        tape->width = width;
        tape->height = height;
        tape->background = settings.background;
        tape->order = order;
        tape->offsets.assign(1, 0);
        tape->entries.clear();
    }

    for (std::size_t g : order) {
        const Projection& p = projections[g];
        const double opacity = view.opacities[g];
        const double record_opacity = record ? view.record_opacities[g] : 0.0;
        const Vec3& color = view.colors[g];
        // Below this exponent neither alpha can reach the cutoff; the margin
        // leaves borderline pixels to the exact test.
        const double reach = std::max(opacity, record_opacity);
        const double skip_below =
            reach > 0.0 ? std::log(settings.alpha_cutoff / reach) - 1e-6 : -std::numeric_limits<double>::infinity();
        if (reach <= 0.0 && settings.alpha_cutoff > 0.0) {
            if (tape) tape->offsets.push_back(tape->entries.size());
            continue;
        }
        const double a = p.conic(0, 0), b = p.conic(0, 1), c = p.conic(1, 1);
        for (int y = p.y0; y <= p.y1; ++y) {
            // Columns where power >= skip_below, padded by one pixel.
            const double dy = y - p.mean.y();
            int xs = p.x0, xe = p.x1;
            if (std::isfinite(skip_below)) {
                const double disc = b * b * dy * dy - a * (c * dy * dy + 2.0 * skip_below);
                if (disc < 0.0) continue;
                const double root = std::sqrt(disc);
                const double lo = p.mean.x() + (-b * dy - root) / a, hi = p.mean.x() + (-b * dy + root) / a;
                xs = std::max<double>(xs, std::floor(lo) - 1.0);
                xe = std::min<double>(xe, std::ceil(hi) + 1.0);
            }
            for (int x = xs; x <= xe; ++x) {
                const std::size_t pix = static_cast<std::size_t>(y) * width + x;
                if (done[pix]) continue;
                const double dx = x - p.mean.x();
                const double power = -0.5 * (a * dx * dx + 2.0 * b * dx * dy + c * dy * dy);
                if (power > 0.0 || power < skip_below) continue;
                const double falloff = std::exp(power);
                double alpha = opacity * falloff;
                bool clamped = false;
                if (alpha > settings.alpha_max) {
                    alpha = settings.alpha_max;
                    clamped = true;
                }
                if (alpha < settings.alpha_cutoff) {
                    if (record && record_opacity * falloff >= settings.alpha_cutoff)
                        tape->entries.push_back({static_cast<std::uint32_t>(pix), 0.0, transmittance[pix], falloff, false});
                    continue;
                }
                const double next = transmittance[pix] * (1.0 - alpha);
                if (next < settings.transmittance_floor) {
                    done[pix] = 1;
                    continue;
                }
                double* out = image.pixel(x, y);
                const double w = alpha * transmittance[pix];
                out[0] += color[0] * w;
                out[1] += color[1] * w;
                out[2] += color[2] * w;
                if (tape)
                    tape->entries.push_back({static_cast<std::uint32_t>(pix), alpha, transmittance[pix], falloff, clamped});
                transmittance[pix] = next;
                ++local.blended;
            }
        }
        if (tape) tape->offsets.push_back(tape->entries.size());
    }

    for (std::size_t pix = 0; pix < pixels; ++pix) {
        double* out = image.data.data() + pix * 3;
        for (int c = 0; c < 3; ++c) out[c] += settings.background[c] * transmittance[pix];
    }
    if (tape) {
        tape->projections = std::move(projections);
        tape->final_transmittance = std::move(transmittance);
    }
    if (stats) *stats = local;
    return image;
}

SplatGradients backward(const Image& loss_gradient, const SplatView& view, const RenderTape& tape) {
    const std::size_t n = view.size();
    SplatGradients grads;
    grads.opacity.assign(n, 0.0);
    grads.color.assign(n, Vec3::Zero());
    grads.cov2d.assign(n, Mat2::Zero());
    if (loss_gradient.width != tape.width || loss_gradient.height != tape.height)
        throw Error("loss gradient does not match the rendered image");

    const std::size_t pixels = static_cast<std::size_t>(tape.width) * tape.height;
    std::vector<Vec3> behind(pixels);
    for (std::size_t pix = 0; pix < pixels; ++pix) behind[pix] = tape.background * tape.final_transmittance[pix];

    for (std::size_t k = tape.order.size(); k-- > 0;) {
        const std::size_t g = tape.order[k];
        const Projection& p = tape.projections[g];
        const Vec3& color = view.colors[g];
        const double opacity = view.opacities[g];
        double d_opacity = 0.0;
        Vec3 d_color = Vec3::Zero();
        Mat2 d_cov = Mat2::Zero();
        for (std::size_t e = tape.offsets[k]; e < tape.offsets[k + 1]; ++e) {
            const RenderTape::Entry& entry = tape.entries[e];
            const std::size_t pix = entry.pixel;
            const Eigen::Map<const Vec3> dl_dc(loss_gradient.data.data() + pix * 3);
            const double weight = entry.alpha * entry.transmittance;
            d_color += weight * dl_dc;
            const Vec3 dc_dalpha = color * entry.transmittance - behind[pix] / (1.0 - entry.alpha);
            const double dl_dalpha = dl_dc.dot(dc_dalpha);
            behind[pix] += color * weight;
            if (entry.clamped) continue;
            d_opacity += dl_dalpha * entry.falloff;
            const double dl_dpower = dl_dalpha * opacity * entry.falloff;
            if (dl_dpower != 0.0) {
                const int x = static_cast<int>(pix % static_cast<std::size_t>(tape.width));
                const int y = static_cast<int>(pix / static_cast<std::size_t>(tape.width));
                const Vec2 delta(x - p.mean.x(), y - p.mean.y());
                const Vec2 q = p.conic * delta;
                d_cov += (0.5 * dl_dpower) * (q * q.transpose());
            }
        }
        grads.opacity[g] = d_opacity;
        grads.color[g] = d_color;
        grads.cov2d[g] = d_cov;
    }
    return grads;
}

std::vector<Vec3> sh_colors(const GaussianCloud& cloud, const CameraPose& pose) {
    std::vector<Vec3> colors(cloud.size());
    const int bases = cloud.sh_bases();
    parallel_for(cloud.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            colors[i] = evaluate_sh(cloud.sh_of(i), bases, cloud.positions[i] - pose.center);
    });
    return colors;
}

Image render_cloud(const GaussianCloud& cloud, const CameraPose& pose, const RenderSettings& settings) {
    const auto colors = sh_colors(cloud, pose);
    SplatView view{cloud.positions, cloud.rotations, cloud.scales, cloud.opacities, colors, {}};
    return rasterize(view, pose, settings);
}

}  // namespace gscodec
