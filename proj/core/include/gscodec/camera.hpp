// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gscodec/gaussian_cloud.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace gscodec {

/// Pinhole camera. `rotation` maps world to camera axes (x right, y down,
/// z forward); camera-space point = rotation * (p - center).
struct CameraPose {
    Mat3 rotation = Mat3::Identity();
    Vec3 center = Vec3::Zero();
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;

    Vec3 to_camera(const Vec3& world) const { return rotation * (world - center); }

    /// Throws gscodec::Error if the rotation is not orthonormal (1e-6) or a
    /// focal length or the image size is not positive.
    void validate() const;

    /// Camera at `eye` looking at `target` with the given world up vector.
    static CameraPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal,
                              int width, int height);
};

/// JSON camera file: {"cameras": [{"rotation": [9 row-major], "center": [3],
/// "focal": [fx, fy], "principal": [cx, cy], "size": [w, h]}, ...]}.
/// A bare top-level array of camera objects is accepted too.
std::vector<CameraPose> parse_cameras_json(const std::string& text);
std::vector<CameraPose> load_cameras(const std::filesystem::path& path);
std::string cameras_to_json(const std::vector<CameraPose>& cameras);
void save_cameras(const std::vector<CameraPose>& cameras, const std::filesystem::path& path);

}  // namespace gscodec
