// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include "gscodec/camera.hpp"

#include "gscodec/error.hpp"

#include <Eigen/Geometry>

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace gscodec {

using nlohmann::json;

void CameraPose::validate() const {
    const double err = (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (!(err <= 1e-6)) throw Error("camera rotation is not orthonormal");
    if (!(fx > 0.0 && fy > 0.0)) throw Error("camera focal lengths must be positive");
    if (width < 1 || height < 1) throw Error("camera image size must be at least 1x1");
    if (!center.allFinite()) throw Error("camera center is not finite");
}

CameraPose CameraPose::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal, int width,
                               int height) {
    const Vec3 forward = (target - eye).normalized();
    const Vec3 right = forward.cross(up).normalized();
    const Vec3 down = forward.cross(right);
    CameraPose pose;
    pose.rotation.row(0) = right.transpose();
    pose.rotation.row(1) = down.transpose();
    pose.rotation.row(2) = forward.transpose();
    pose.center = eye;
    pose.fx = pose.fy = focal;
    pose.cx = 0.5 * (width - 1);
    pose.cy = 0.5 * (height - 1);
    pose.width = width;
    pose.height = height;
    return pose;
}

namespace {

std::vector<double> numbers(const json& object, const char* key, std::size_t expected) {
    if (!object.contains(key)) throw Error(std::string("camera is missing '") + key + "'");
    const auto& value = object.at(key);
    if (!value.is_array() || value.size() != expected)
        throw Error(std::string("camera field '") + key + "' must have " + std::to_string(expected) + " numbers");
    std::vector<double> out;
    for (const auto& v : value) out.push_back(v.get<double>());
    return out;
}

}  // namespace

std::vector<CameraPose> parse_cameras_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("camera file is not valid JSON: ") + e.what());
    }
    const json& list = doc.is_array() ? doc : doc.at("cameras");
    std::vector<CameraPose> cameras;
    for (const auto& item : list) {
        CameraPose pose;
        const auto r = numbers(item, "rotation", 9);
        for (int i = 0; i < 9; ++i) pose.rotation(i / 3, i % 3) = r[static_cast<std::size_t>(i)];
        const auto c = numbers(item, "center", 3);
        pose.center = Vec3(c[0], c[1], c[2]);
        const auto f = numbers(item, "focal", 2);
        pose.fx = f[0];
        pose.fy = f[1];
        const auto p = numbers(item, "principal", 2);
        pose.cx = p[0];
        pose.cy = p[1];
        const auto s = numbers(item, "size", 2);
        pose.width = static_cast<int>(s[0]);
        pose.height = static_cast<int>(s[1]);
        pose.validate();
        cameras.push_back(pose);
    }
    return cameras;
}

std::vector<CameraPose> load_cameras(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_cameras_json(ss.str());
}

std::string cameras_to_json(const std::vector<CameraPose>& cameras) {
    json list = json::array();
    for (const auto& pose : cameras) {
        json item;
        std::vector<double> r;
        for (int i = 0; i < 9; ++i) r.push_back(pose.rotation(i / 3, i % 3));
        item["rotation"] = r;
        item["center"] = {pose.center.x(), pose.center.y(), pose.center.z()};
        item["focal"] = {pose.fx, pose.fy};
        item["principal"] = {pose.cx, pose.cy};
        item["size"] = {pose.width, pose.height};
        list.push_back(item);
    }
    return json{{"cameras", list}}.dump(2);
}

void save_cameras(const std::vector<CameraPose>& cameras, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << cameras_to_json(cameras) << "\n";
}

}  // namespace gscodec
