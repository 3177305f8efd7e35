// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace gscodec {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Number of SH basis functions per channel for a degree in [0, 3].
constexpr int sh_bases_for_degree(int degree) { return (degree + 1) * (degree + 1); }

/// Scene as an array of per-Gaussian attributes.
///
/// Opacities and scales are held post-activation (o in [0,1], s > 0).
/// Rotations are unit quaternions (w, x, y, z) with the first nonzero
/// component positive. SH coefficients are laid out [gaussian][channel][basis].
struct GaussianCloud {
    std::vector<Vec3> positions;
    std::vector<double> opacities;
    std::vector<Vec3> scales;
    std::vector<Vec4> rotations;
    std::vector<double> sh;
    int sh_degree = 0;

    std::size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }
    int sh_bases() const { return sh_bases_for_degree(sh_degree); }

    std::span<const double> sh_of(std::size_t n) const {
        const std::size_t stride = 3 * static_cast<std::size_t>(sh_bases());
        return {sh.data() + n * stride, stride};
    }
    std::span<double> sh_of(std::size_t n) {
        const std::size_t stride = 3 * static_cast<std::size_t>(sh_bases());
        return {sh.data() + n * stride, stride};
    }

    void resize(std::size_t n);

    /// Copies the listed Gaussians, in order.
    GaussianCloud select(std::span<const std::size_t> indices) const;

    /// Throws gscodec::Error when array lengths or attribute ranges are invalid.
    void validate() const;
};

/// Normalizes q and flips its sign so the first nonzero component is positive.
/// Throws on a zero or non-finite quaternion.
Vec4 canonical_quaternion(const Vec4& q);

/// Rotation matrix of a unit quaternion (w, x, y, z).
Mat3 rotation_from_quaternion(const Vec4& q);

/// Sigma = R diag(s^2) R^T.
Mat3 covariance_from(const Vec3& scale, const Vec4& rotation);

}  // namespace gscodec
