// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include "gscodec/gaussian_cloud.hpp"

#include "gscodec/error.hpp"

#include <cmath>
#include <string>

namespace gscodec {

void GaussianCloud::resize(std::size_t n) {
    positions.resize(n, Vec3::Zero());
    opacities.resize(n, 1.0);
    scales.resize(n, Vec3::Ones());
    rotations.resize(n, Vec4(1.0, 0.0, 0.0, 0.0));
    sh.resize(n * 3 * static_cast<std::size_t>(sh_bases()), 0.0);
}

GaussianCloud GaussianCloud::select(std::span<const std::size_t> indices) const {
    GaussianCloud out;
    out.sh_degree = sh_degree;
    const std::size_t stride = 3 * static_cast<std::size_t>(sh_bases());
    out.positions.reserve(indices.size());
    out.opacities.reserve(indices.size());
    out.scales.reserve(indices.size());
    out.rotations.reserve(indices.size());
    out.sh.reserve(indices.size() * stride);
    for (std::size_t i : indices) {
        out.positions.push_back(positions[i]);
        out.opacities.push_back(opacities[i]);
        out.scales.push_back(scales[i]);
        out.rotations.push_back(rotations[i]);
        auto coeffs = sh_of(i);
        out.sh.insert(out.sh.end(), coeffs.begin(), coeffs.end());
    }
    return out;
}

void GaussianCloud::validate() const {
    if (sh_degree < 0 || sh_degree > 3) throw Error("SH degree must be in [0, 3]");
    const std::size_t n = positions.size();
    if (opacities.size() != n || scales.size() != n || rotations.size() != n ||
        sh.size() != n * 3 * static_cast<std::size_t>(sh_bases())) {
        throw Error("attribute arrays disagree on the Gaussian count");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!positions[i].allFinite()) throw Error("non-finite position at " + std::to_string(i));
        if (!(opacities[i] >= 0.0 && opacities[i] <= 1.0))
            throw Error("opacity outside [0,1] at " + std::to_string(i));
        if (!(scales[i].minCoeff() > 0.0) || !scales[i].allFinite())
            throw Error("non-positive scale at " + std::to_string(i));
        if (std::abs(rotations[i].norm() - 1.0) > 1e-5)
            throw Error("rotation not unit length at " + std::to_string(i));
    }
}

Vec4 canonical_quaternion(const Vec4& q) {
    const double norm = q.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) throw Error("quaternion has zero or non-finite norm");
    Vec4 out = q / norm;
    for (int i = 0; i < 4; ++i) {
        if (out[i] != 0.0) {
            if (out[i] < 0.0) out = -out;
            break;
        }
    }
    return out;
}

Mat3 rotation_from_quaternion(const Vec4& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 r;
    r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
        2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
        2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
    return r;
}

Mat3 covariance_from(const Vec3& scale, const Vec4& rotation) {
    const Mat3 r = rotation_from_quaternion(rotation.normalized());
    const Mat3 m = r * scale.asDiagonal();
    Mat3 sigma = m * m.transpose();
    // Symmetrize exactly; the product can differ in the last bit.
    return 0.5 * (sigma + sigma.transpose());
}

}  // namespace gscodec
