// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include "gscodec/ply.hpp"

#include "gscodec/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <unordered_map>

namespace gscodec {

namespace {

static_assert(std::endian::native == std::endian::little, "PLY IO assumes a little-endian host");

constexpr double kOpacityClamp = 1e-6;

std::string header_text(std::span<const std::uint8_t> bytes, std::size_t& body_offset) {
    static constexpr std::string_view kEnd = "end_header\n";
    const auto* begin = reinterpret_cast<const char*>(bytes.data());
    const std::string_view view(begin, bytes.size());
    const std::size_t pos = view.find(kEnd);
    if (pos == std::string_view::npos) throw PlyError("missing end_header");
    body_offset = pos + kEnd.size();
    return std::string(view.substr(0, pos));
}

}  // namespace

GaussianCloud load_ply(std::span<const std::uint8_t> bytes) {
    std::size_t body = 0;
    std::istringstream header(header_text(bytes, body));

    std::string line;
    if (!std::getline(header, line) || line != "ply") throw PlyError("not a PLY file");

    std::size_t count = 0;
    bool have_vertex = false;
    bool in_vertex = false;
    std::vector<std::string> names;
    while (std::getline(header, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string keyword;
        ls >> keyword;
        if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
        if (keyword == "format") {
            std::string format, version;
            ls >> format >> version;
            if (format != "binary_little_endian") throw PlyError("unsupported format '" + format + "'");
        } else if (keyword == "element") {
            std::string name;
            std::size_t n = 0;
            ls >> name >> n;
            if (name == "vertex") {
                have_vertex = true;
                in_vertex = true;
                count = n;
            } else {
                if (n != 0) throw PlyError("unsupported element '" + name + "'");
                in_vertex = false;
            }
        } else if (keyword == "property") {
            std::string type, name;
            ls >> type >> name;
            if (!in_vertex) continue;
            if (type != "float" && type != "float32") throw PlyError("property must be float32", name);
            names.push_back(name);
        } else {
            throw PlyError("unexpected header line '" + line + "'");
        }
    }
    if (!have_vertex) throw PlyError("missing vertex element");

    std::unordered_map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < names.size(); ++i) column[names[i]] = i;
    auto require = [&](const std::string& name) {
        auto it = column.find(name);
        if (it == column.end()) throw PlyError("missing required property", name);
        return it->second;
    };

    const std::size_t x = require("x"), y = require("y"), z = require("z");
    std::size_t dc[3], sc[3], rot[4];
    for (int i = 0; i < 3; ++i) dc[i] = require("f_dc_" + std::to_string(i));
    for (int i = 0; i < 3; ++i) sc[i] = require("scale_" + std::to_string(i));
    for (int i = 0; i < 4; ++i) rot[i] = require("rot_" + std::to_string(i));
    const std::size_t op = require("opacity");

    std::size_t rest_count = 0;
    while (column.count("f_rest_" + std::to_string(rest_count))) ++rest_count;
    int degree = -1;
    for (int d = 0; d <= 3; ++d)
        if (3 * static_cast<std::size_t>(sh_bases_for_degree(d) - 1) == rest_count) degree = d;
    if (degree < 0) throw PlyError("f_rest count " + std::to_string(rest_count) + " is not 0, 9, 24 or 45");
    std::vector<std::size_t> rest(rest_count);
    for (std::size_t i = 0; i < rest_count; ++i) rest[i] = column["f_rest_" + std::to_string(i)];

    const std::size_t stride = names.size() * 4;
    if (bytes.size() - body < count * stride) throw PlyError("vertex data truncated");

    GaussianCloud cloud;
    cloud.sh_degree = degree;
    cloud.resize(count);
    const int bases = cloud.sh_bases();
    std::vector<float> row(names.size());
    for (std::size_t n = 0; n < count; ++n) {
        std::memcpy(row.data(), bytes.data() + body + n * stride, stride);
        for (std::size_t c = 0; c < row.size(); ++c)
            if (!std::isfinite(row[c])) throw PlyError("non-finite value in vertex " + std::to_string(n), names[c]);

        cloud.positions[n] = Vec3(row[x], row[y], row[z]);
        cloud.opacities[n] = 1.0 / (1.0 + std::exp(-static_cast<double>(row[op])));
        cloud.scales[n] = Vec3(std::exp(static_cast<double>(row[sc[0]])), std::exp(static_cast<double>(row[sc[1]])),
                               std::exp(static_cast<double>(row[sc[2]])));
        try {
            cloud.rotations[n] = canonical_quaternion(Vec4(row[rot[0]], row[rot[1]], row[rot[2]], row[rot[3]]));
        } catch (const Error&) {
            throw PlyError("zero-length quaternion in vertex " + std::to_string(n), "rot_0");
        }
        auto coeffs = cloud.sh_of(n);
        for (int c = 0; c < 3; ++c) {
            coeffs[static_cast<std::size_t>(c * bases)] = row[dc[c]];
            for (int b = 1; b < bases; ++b)
                coeffs[static_cast<std::size_t>(c * bases + b)] = row[rest[static_cast<std::size_t>(c * (bases - 1) + b - 1)]];
        }
    }
    return cloud;
}

GaussianCloud load_ply_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load_ply(bytes);
}

std::vector<std::uint8_t> save_ply(const GaussianCloud& cloud, PlySaveReport* report) {
    cloud.validate();
    const int bases = cloud.sh_bases();
    const int rest = 3 * (bases - 1);

    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\nelement vertex " << cloud.size() << "\n";
    for (const char* name : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"})
        header << "property float " << name << "\n";
    for (int i = 0; i < rest; ++i) header << "property float f_rest_" << i << "\n";
    header << "property float opacity\n";
    for (int i = 0; i < 3; ++i) header << "property float scale_" << i << "\n";
    for (int i = 0; i < 4; ++i) header << "property float rot_" << i << "\n";
    header << "end_header\n";

    const std::string text = header.str();
    const std::size_t props = 9 + static_cast<std::size_t>(rest) + 1 + 3 + 4;
    std::vector<std::uint8_t> bytes(text.begin(), text.end());
    bytes.reserve(text.size() + cloud.size() * props * 4);

    std::size_t clamped = 0;
    std::vector<float> row(props);
    for (std::size_t n = 0; n < cloud.size(); ++n) {
        std::size_t k = 0;
        for (int i = 0; i < 3; ++i) row[k++] = static_cast<float>(cloud.positions[n][i]);
        for (int i = 0; i < 3; ++i) row[k++] = 0.0f;
        auto coeffs = cloud.sh_of(n);
        for (int c = 0; c < 3; ++c) row[k++] = static_cast<float>(coeffs[static_cast<std::size_t>(c * bases)]);
        for (int c = 0; c < 3; ++c)
            for (int b = 1; b < bases; ++b) row[k++] = static_cast<float>(coeffs[static_cast<std::size_t>(c * bases + b)]);
        double o = cloud.opacities[n];
        if (o < kOpacityClamp || o > 1.0 - kOpacityClamp) {
            o = std::clamp(o, kOpacityClamp, 1.0 - kOpacityClamp);
            ++clamped;
        }
        row[k++] = static_cast<float>(std::log(o / (1.0 - o)));
        for (int i = 0; i < 3; ++i) row[k++] = static_cast<float>(std::log(cloud.scales[n][i]));
        for (int i = 0; i < 4; ++i) row[k++] = static_cast<float>(cloud.rotations[n][i]);
        const auto* raw = reinterpret_cast<const std::uint8_t*>(row.data());
        bytes.insert(bytes.end(), raw, raw + props * 4);
    }
    if (report) report->clamped_opacities = clamped;
    return bytes;
}

void save_ply_file(const GaussianCloud& cloud, const std::filesystem::path& path, PlySaveReport* report) {
    const auto bytes = save_ply(cloud, report);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace gscodec
