// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include "gscodec/sh.hpp"

#include "gscodec/error.hpp"

#include <string>

namespace gscodec {

namespace {

constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                          -1.0925484305920792, 0.5462742152960396};
constexpr double kC3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                          0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                          -0.5900435899266435};

}  // namespace

Vec3 evaluate_sh_unclamped(std::span<const double> coeffs, int bases, const Vec3& direction) {
    if (bases != 1 && bases != 4 && bases != 9 && bases != 16)
        throw Error("SH basis count must be 1, 4, 9 or 16, got " + std::to_string(bases));
    if (coeffs.size() != 3 * static_cast<std::size_t>(bases))
        throw Error("SH coefficient span does not match the basis count");

    double basis[16];
    basis[0] = kShC0;
    if (bases > 1) {
        Vec3 d = direction;
        const double n = d.norm();
        if (n > 0.0) d /= n;
        const double x = d.x(), y = d.y(), z = d.z();
        basis[1] = -kC1 * y;
        basis[2] = kC1 * z;
        basis[3] = -kC1 * x;
        if (bases > 4) {
            const double xx = x * x, yy = y * y, zz = z * z;
            basis[4] = kC2[0] * x * y;
            basis[5] = kC2[1] * y * z;
            basis[6] = kC2[2] * (2.0 * zz - xx - yy);
            basis[7] = kC2[3] * x * z;
            basis[8] = kC2[4] * (xx - yy);
            if (bases > 9) {
                basis[9] = kC3[0] * y * (3.0 * xx - yy);
                basis[10] = kC3[1] * x * y * z;
                basis[11] = kC3[2] * y * (4.0 * zz - xx - yy);
                basis[12] = kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
                basis[13] = kC3[4] * x * (4.0 * zz - xx - yy);
                basis[14] = kC3[5] * z * (xx - yy);
                basis[15] = kC3[6] * x * (xx - 3.0 * yy);
            }
        }
    }

    Vec3 rgb;
    for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (int b = 0; b < bases; ++b) sum += basis[b] * coeffs[static_cast<std::size_t>(c * bases + b)];
        rgb[c] = sum + 0.5;
    }
    return rgb;
}

Vec3 evaluate_sh(std::span<const double> coeffs, int bases, const Vec3& direction) {
    return evaluate_sh_unclamped(coeffs, bases, direction).cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace gscodec
