// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gscodec/color_field.hpp"
#include "gscodec/gaussian_cloud.hpp"
#include "gscodec/masking.hpp"
#include "gscodec/rvq.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gscodec {

inline constexpr std::array<char, 8> kContainerMagic{'C', 'G', 'S', 'C', 'E', 'N', 'E', '1'};
inline constexpr std::uint32_t kContainerVersion = 1;

enum class ScaleDomain : std::uint8_t { linear = 0, log = 1 };

struct PostProcessFlags {
    bool enabled = false;
    double hash_prune_threshold = 0.1;
};

/// Everything a .cgs file stores. `positions`/`opacities` belong to the kept
/// Gaussians; the index streams must have the same count.
struct SceneEncodeInput {
    std::span<const Vec3> positions;
    std::span<const double> opacities;
    const RvqCodec* scale_codec = nullptr;
    const IndexStream* scale_indices = nullptr;
    const RvqCodec* rotation_codec = nullptr;
    const IndexStream* rotation_indices = nullptr;
    const ColorField* field = nullptr;
    MaskMode mask_mode = MaskMode::both;
    ScaleDomain scale_domain = ScaleDomain::linear;
    PostProcessFlags post{};
};

/// Deterministic serialization. Throws gscodec::Error on missing or
/// inconsistent codecs/field.
std::vector<std::uint8_t> encode_file(const SceneEncodeInput& input);

struct ContainerHeader {
    std::uint32_t version = kContainerVersion;
    std::uint64_t count = 0;
    bool post_processed = false;
    ScaleDomain scale_domain = ScaleDomain::linear;
    MaskMode mask_mode = MaskMode::both;
    std::uint32_t codebook_size = 0;
    std::uint32_t num_stages = 0;
    FieldConfig field{};
};

/// Renderable scene recovered from a container.
struct DecodedScene {
    ContainerHeader header;
    std::vector<Vec3> positions;
    std::vector<double> opacities;
    std::vector<Vec3> scales;      // R-VQ reconstructions (exp'd in log domain)
    std::vector<Vec4> rotations;   // renormalized
    RvqCodec scale_codec, rotation_codec;
    IndexStream scale_indices, rotation_indices;
    ColorField field;

    std::size_t size() const { return positions.size(); }

    /// Colors for a camera center through the field (cached when given).
    std::vector<Vec3> colors(const Vec3& camera_center, const FeatureCache* cache = nullptr) const;

    /// Degree-0 cloud; SH DC holds the raw field output at `bake_direction`.
    /// Scales are made strictly positive (|s|, floored at 1e-8).
    GaussianCloud to_cloud(const Vec3& bake_direction) const;
};

/// Throws DecodeError (truncated, bad magic/version, CRC mismatch,
/// out-of-range index, malformed block).
DecodedScene decode_file(std::span<const std::uint8_t> bytes);
ContainerHeader read_header(std::span<const std::uint8_t> bytes);

struct StorageReport {
    std::uint64_t count = 0;
    std::uint64_t position = 0;
    std::uint64_t opacity = 0;
    std::uint64_t scale = 0;
    std::uint64_t rotation = 0;
    std::uint64_t hash = 0;
    std::uint64_t mlp = 0;
    std::uint64_t overhead = 0;
    std::uint64_t total = 0;
    /// 59 float32 values per Gaussian.
    std::uint64_t baseline = 0;
    /// baseline / total; empty when either is zero.
    std::optional<double> ratio;
};

inline constexpr std::uint64_t kBaselineBytesPerGaussian = 59 * 4;

/// Per-channel byte counts of a container. Channel sums plus overhead equal
/// the file length exactly.
StorageReport stats(std::span<const std::uint8_t> bytes);

/// Storage a no-post-processing container would take for N Gaussians,
/// computed from the layout rules alone (no training, no allocation).
StorageReport predict_storage(std::uint64_t count, std::uint32_t codebook_size, std::uint32_t num_stages,
                              const FieldConfig& field);

std::string storage_report_json(const StorageReport& report);

}  // namespace gscodec
