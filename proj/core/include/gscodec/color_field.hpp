// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gscodec/camera.hpp"
#include "gscodec/gaussian_cloud.hpp"
#include "gscodec/image.hpp"
#include "gscodec/renderer.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gscodec {

/// Hash grid + MLP hyperparameters. Defaults are the real-scene setting.
struct FieldConfig {
    int num_levels = 16;
    int features_per_level = 2;
    int base_resolution = 16;
    int max_resolution = 4096;
    std::uint32_t max_hashmap = 1u << 19;
    int mlp_hidden = 64;
    int mlp_layers = 2;

    static FieldConfig real_scene() { return {}; }
    static FieldConfig synthetic_scene() {
        FieldConfig c;
        c.max_hashmap = 1u << 16;
        return c;
    }

    int feature_dim() const { return num_levels * features_per_level; }
    int mlp_input_dim() const { return feature_dim() + 3; }

    void validate() const;
    bool operator==(const FieldConfig&) const = default;
};

struct LevelLayout {
    std::uint32_t resolution;
    std::uint32_t table_size;  // entries; each entry holds features_per_level values
    bool dense;
};

/// Geometric resolutions from base to max (growth exp((ln max - ln base)/(L-1)),
/// rounded), with T_l = min(max_hashmap, (N_l+1)^3 rounded up to a multiple of 8).
std::vector<LevelLayout> level_layout(const FieldConfig& config);

/// Total table entries over all levels.
std::uint64_t hash_table_entries(const FieldConfig& config);

/// Number of MLP parameters (weights and biases).
std::size_t mlp_parameter_count(const FieldConfig& config);

/// Identity inside the unit ball, (2 - 1/|p|) p/|p| outside.
Vec3 contract(const Vec3& p);

/// contract(p) mapped affinely from [-2,2]^3 to [0,1]^3.
Vec3 contract_to_unit(const Vec3& p);

/// Spatial hash of an integer grid corner.
inline std::uint32_t hash_corner(std::uint32_t x, std::uint32_t y, std::uint32_t z) {
    return x ^ (y * 2654435761u) ^ (z * 805459861u);
}

/// Table slots and trilinear weights of one point at every level.
struct GridFootprint {
    std::vector<std::array<std::uint32_t, 8>> slots;
    std::vector<std::array<double, 8>> weights;
};

/// Multiresolution hash grid + MLP color field. Parameters live in one flat
/// array: per-level tables first, then each dense layer's weights
/// (in x out, row-major) followed by its biases.
class ColorField {
public:
    ColorField() = default;
    explicit ColorField(const FieldConfig& config);

    /// Tables uniform in [-1e-4, 1e-4]; MLP uniform in +-1/sqrt(fan_in).
    static ColorField initialized(const FieldConfig& config, std::uint64_t seed);

    const FieldConfig& config() const { return config_; }
    const std::vector<LevelLayout>& layout() const { return layout_; }
    bool empty() const { return params_.empty(); }

    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }
    std::span<double> table(int level);
    std::span<const double> table(int level) const;
    std::size_t table_parameter_count() const { return mlp_offset_; }
    std::span<double> mlp_parameters();
    std::span<const double> mlp_parameters() const;

    /// Hash features for a point already in [0,1]^3.
    void hash_encode(const Vec3& x01, std::span<double> features, GridFootprint* footprint = nullptr) const;

    /// contract -> unit cube -> hash_encode.
    void encode_position(const Vec3& p, std::span<double> features) const;

    /// Raw MLP outputs (SH degree-0 coefficients) for a batch. `features`
    /// is rows x feature_dim, `directions` rows x 3.
    void mlp_forward(std::span<const double> features, std::span<const Vec3> directions,
                     std::span<Vec3> outputs) const;

    /// rgb = clamp(0.5 + C0 * out, 0, 1). Throws on a non-finite position.
    Vec3 query_color(const Vec3& p, const Vec3& d) const;
    Vec3 query_color_cached(std::span<const double> features, const Vec3& d) const;

private:
    FieldConfig config_{};
    std::vector<LevelLayout> layout_;
    std::vector<std::size_t> table_offsets_;
    std::size_t mlp_offset_ = 0;
    std::vector<double> params_;
};

inline Vec3 sh_dc_to_rgb(const Vec3& raw) {
    constexpr double c0 = 0.28209479177387814;
    return (Vec3::Constant(0.5) + c0 * raw).cwiseMax(0.0).cwiseMin(1.0);
}

/// Grid features per Gaussian, valid for fixed positions and a fixed field.
struct FeatureCache {
    std::size_t count = 0;
    int dim = 0;
    std::vector<double> values;

    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
};

FeatureCache precompute_features(std::span<const Vec3> positions, const ColorField& field);

/// Per-Gaussian rgb seen from `camera_center`. With a cache only the MLP runs;
/// the result is bit-identical to the uncached path. Throws on a cache/position
/// count mismatch.
std::vector<Vec3> field_colors(std::span<const Vec3> positions, const Vec3& camera_center,
                               const ColorField& field, const FeatureCache* cache = nullptr);

/// Raw MLP outputs for the same inputs (what a degree-0 export stores).
std::vector<Vec3> field_raw_outputs(std::span<const Vec3> positions, std::span<const Vec3> directions,
                                    const ColorField& field, const FeatureCache* cache = nullptr);

/// d loss / d parameters (flat, same layout as ColorField::parameters) given
/// d loss / d rgb per sample. Samples whose rgb is clamped contribute nothing.
std::vector<double> field_backward(const ColorField& field, std::span<const Vec3> positions,
                                   std::span<const Vec3> directions, std::span<const Vec3> rgb_gradients);

struct DistillConfig {
    std::size_t iterations = 5000;
    double lr = 1e-2;
    /// Fractions of the budget where the rate is multiplied by decay_factor
    /// (5K/15K/25K of a 30K schedule).
    std::vector<double> decay_marks{5.0 / 30.0, 15.0 / 30.0, 25.0 / 30.0};
    double decay_factor = 0.33;
    std::size_t batch_size = 1024;
    std::uint64_t seed = 0;
    double divergence_factor = 10.0;
};

/// Learning rate at `iteration` under the step schedule.
double distill_learning_rate(const DistillConfig& config, std::size_t iteration);

struct DistillResult {
    std::vector<double> losses;
    double final_loss = 0.0;
};

/// Fits query_color to evaluate_sh of the source cloud with Adam. Directions
/// are uniform on the sphere, or towards Gaussians from random cameras when
/// `cameras` is non-empty. Throws TrainingError if the loss diverges.
DistillResult distill_train(const GaussianCloud& cloud, ColorField& field, const DistillConfig& config,
                            std::span<const CameraPose> cameras = {});

/// Trains the field against reference renders of a fixed-geometry cloud by
/// backpropagating the render loss through the rasterizer into the field.
DistillResult train_field_end_to_end(const GaussianCloud& cloud, ColorField& field,
                                     std::span<const CameraPose> views, std::span<const Image> references,
                                     const DistillConfig& config, const RenderSettings& settings = {});

/// Mean absolute rgb error between field and SH over random (Gaussian, direction) pairs.
double field_mean_abs_error(const GaussianCloud& cloud, const ColorField& field, std::size_t samples,
                            std::uint64_t seed);

}  // namespace gscodec
