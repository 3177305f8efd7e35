// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include "gscodec/color_field.hpp"

#include "gscodec/adam.hpp"
#include "gscodec/error.hpp"
#include "gscodec/metrics.hpp"
#include "gscodec/parallel.hpp"
#include "gscodec/sh.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

namespace gscodec {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Fixed batch size for the MLP so results never depend on the thread count.
constexpr std::size_t kMlpChunk = 256;

std::vector<int> layer_dims(const FieldConfig& config) {
    std::vector<int> dims{config.mlp_input_dim()};
    for (int i = 0; i < config.mlp_layers; ++i) dims.push_back(config.mlp_hidden);
    dims.push_back(3);
    return dims;
}

Vec3 safe_direction(const Vec3& v) {
    const double norm = v.norm();
    return norm > 0.0 ? Vec3(v / norm) : Vec3::Zero();
}

struct MlpTape {
    std::vector<RowMatrix> activations;  // input, then each post-ReLU hidden layer
    std::vector<RowMatrix> pre;          // pre-activation of each hidden layer
};

RowMatrix assemble_input(const FieldConfig& config, const double* features, const Vec3* directions,
                         std::size_t rows) {
    const int fdim = config.feature_dim();
    RowMatrix x(static_cast<Eigen::Index>(rows), config.mlp_input_dim());
    for (std::size_t r = 0; r < rows; ++r) {
        for (int f = 0; f < fdim; ++f) x(static_cast<Eigen::Index>(r), f) = features[r * fdim + f];
        for (int c = 0; c < 3; ++c) x(static_cast<Eigen::Index>(r), fdim + c) = directions[r][c];
    }
    return x;
}

RowMatrix run_mlp(const FieldConfig& config, std::span<const double> mlp, RowMatrix x, MlpTape* tape) {
    const auto dims = layer_dims(config);
    std::size_t offset = 0;
    for (std::size_t layer = 0; layer + 1 < dims.size(); ++layer) {
        const int in = dims[layer], out = dims[layer + 1];
        // Eigen-owned copies keep the products independent of heap alignment.
        const RowMatrix w = Eigen::Map<const RowMatrix>(mlp.data() + offset, in, out);
        offset += static_cast<std::size_t>(in) * out;
        const Eigen::RowVectorXd b = Eigen::Map<const Eigen::RowVectorXd>(mlp.data() + offset, out);
        offset += static_cast<std::size_t>(out);
        if (tape) tape->activations.push_back(x);
        RowMatrix z = x * w;
        z.rowwise() += b;
        if (layer + 2 < dims.size()) {
            if (tape) tape->pre.push_back(z);
            x = z.cwiseMax(0.0);
        } else {
            x = std::move(z);
        }
    }
    return x;
}

}  // namespace

void FieldConfig::validate() const {
    if (num_levels < 1 || features_per_level < 1 || base_resolution < 1 || max_resolution < base_resolution ||
        max_hashmap < 1 || mlp_hidden < 1 || mlp_layers < 1) {
        throw Error("invalid color field configuration");
    }
}

std::vector<LevelLayout> level_layout(const FieldConfig& config) {
    config.validate();
    std::vector<LevelLayout> out;
    const double growth = config.num_levels > 1
                              ? std::exp((std::log(static_cast<double>(config.max_resolution)) -
                                          std::log(static_cast<double>(config.base_resolution))) /
                                         (config.num_levels - 1))
                              : 1.0;
    for (int l = 0; l < config.num_levels; ++l) {
        const auto resolution =
            static_cast<std::uint32_t>(std::llround(config.base_resolution * std::pow(growth, l)));
        const std::uint64_t side = resolution + 1ull;
        const std::uint64_t dense = (side * side * side + 7) / 8 * 8;
        LevelLayout level{resolution, config.max_hashmap, false};
        if (dense <= config.max_hashmap) {
            level.table_size = static_cast<std::uint32_t>(dense);
            level.dense = true;
        }
        out.push_back(level);
    }
    return out;
}

std::uint64_t hash_table_entries(const FieldConfig& config) {
    std::uint64_t total = 0;
    for (const auto& level : level_layout(config)) total += level.table_size;
    return total;
}

std::size_t mlp_parameter_count(const FieldConfig& config) {
    const auto dims = layer_dims(config);
    std::size_t total = 0;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i)
        total += static_cast<std::size_t>(dims[i]) * dims[i + 1] + dims[i + 1];
    return total;
}

Vec3 contract(const Vec3& p) {
    const double norm = p.norm();
    if (norm <= 1.0) return p;
    return (2.0 - 1.0 / norm) * (p / norm);
}

Vec3 contract_to_unit(const Vec3& p) { return (contract(p) + Vec3::Constant(2.0)) / 4.0; }

ColorField::ColorField(const FieldConfig& config) : config_(config), layout_(level_layout(config)) {
    std::size_t offset = 0;
    for (const auto& level : layout_) {
        table_offsets_.push_back(offset);
        offset += static_cast<std::size_t>(level.table_size) * config_.features_per_level;
    }
    mlp_offset_ = offset;
    params_.assign(offset + mlp_parameter_count(config_), 0.0);
}

ColorField ColorField::initialized(const FieldConfig& config, std::uint64_t seed) {
    ColorField field(config);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> table_init(-1e-4, 1e-4);
    for (std::size_t i = 0; i < field.mlp_offset_; ++i) field.params_[i] = table_init(rng);
    const auto dims = layer_dims(config);
    std::size_t offset = field.mlp_offset_;
    for (std::size_t layer = 0; layer + 1 < dims.size(); ++layer) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(dims[layer]));
        std::uniform_real_distribution<double> init(-bound, bound);
        const std::size_t count = static_cast<std::size_t>(dims[layer]) * dims[layer + 1] + dims[layer + 1];
        for (std::size_t i = 0; i < count; ++i) field.params_[offset + i] = init(rng);
        offset += count;
    }
    return field;
}

std::span<double> ColorField::table(int level) {
    const auto& l = layout_.at(static_cast<std::size_t>(level));
    return {params_.data() + table_offsets_[level], static_cast<std::size_t>(l.table_size) * config_.features_per_level};
}

std::span<const double> ColorField::table(int level) const {
    const auto& l = layout_.at(static_cast<std::size_t>(level));
    return {params_.data() + table_offsets_[level], static_cast<std::size_t>(l.table_size) * config_.features_per_level};
}

std::span<double> ColorField::mlp_parameters() {
    return std::span<double>(params_).subspan(mlp_offset_);
}

std::span<const double> ColorField::mlp_parameters() const {
    return std::span<const double>(params_).subspan(mlp_offset_);
}

void ColorField::hash_encode(const Vec3& x01, std::span<double> features, GridFootprint* footprint) const {
    const int fpl = config_.features_per_level;
    if (features.size() != static_cast<std::size_t>(config_.feature_dim()))
        throw Error("feature buffer has the wrong size");
    if (footprint) {
        footprint->slots.resize(layout_.size());
        footprint->weights.resize(layout_.size());
    }
    for (std::size_t l = 0; l < layout_.size(); ++l) {
        const LevelLayout& level = layout_[l];
        const double res = level.resolution;
        std::uint32_t cell[3];
        double frac[3];
        for (int a = 0; a < 3; ++a) {
            const double pos = std::clamp(x01[a], 0.0, 1.0) * res;
            const double base = std::min(std::floor(pos), res - 1.0);
            cell[a] = static_cast<std::uint32_t>(base);
            frac[a] = pos - base;
        }
        const double* tab = params_.data() + table_offsets_[l];
        const std::uint32_t side = level.resolution + 1;
        for (int f = 0; f < fpl; ++f) features[l * fpl + f] = 0.0;
        for (int corner = 0; corner < 8; ++corner) {
            std::uint32_t c[3];
            double w = 1.0;
            for (int a = 0; a < 3; ++a) {
                const bool hi = (corner >> a) & 1;
                c[a] = cell[a] + (hi ? 1u : 0u);
                w *= hi ? frac[a] : 1.0 - frac[a];
            }
            const std::uint32_t slot = level.dense ? c[0] + side * (c[1] + side * c[2])
                                                   : hash_corner(c[0], c[1], c[2]) % level.table_size;
            for (int f = 0; f < fpl; ++f) features[l * fpl + f] += w * tab[static_cast<std::size_t>(slot) * fpl + f];
            if (footprint) {
                footprint->slots[l][corner] = slot;
                footprint->weights[l][corner] = w;
            }
        }
    }
}

void ColorField::encode_position(const Vec3& p, std::span<double> features) const {
    hash_encode(contract_to_unit(p), features);
}

void ColorField::mlp_forward(std::span<const double> features, std::span<const Vec3> directions,
                             std::span<Vec3> outputs) const {
    const std::size_t rows = directions.size();
    const auto fdim = static_cast<std::size_t>(config_.feature_dim());
    if (features.size() != rows * fdim || outputs.size() != rows) throw Error("MLP batch shape mismatch");
    if (rows == 0) return;
    const RowMatrix out =
        run_mlp(config_, mlp_parameters(), assemble_input(config_, features.data(), directions.data(), rows), nullptr);
    for (std::size_t r = 0; r < rows; ++r) outputs[r] = out.row(static_cast<Eigen::Index>(r)).transpose();
}

Vec3 ColorField::query_color(const Vec3& p, const Vec3& d) const {
    if (!p.allFinite()) throw Error("color query at a non-finite position");
    std::vector<double> features(static_cast<std::size_t>(config_.feature_dim()));
    encode_position(p, features);
    return query_color_cached(features, d);
}

Vec3 ColorField::query_color_cached(std::span<const double> features, const Vec3& d) const {
    const Vec3 dir = safe_direction(d);
    Vec3 out;
    mlp_forward(features, std::span<const Vec3>(&dir, 1), std::span<Vec3>(&out, 1));
    return sh_dc_to_rgb(out);
}

FeatureCache precompute_features(std::span<const Vec3> positions, const ColorField& field) {
    FeatureCache cache;
    cache.count = positions.size();
    cache.dim = field.config().feature_dim();
    cache.values.resize(cache.count * static_cast<std::size_t>(cache.dim));
    parallel_for(cache.count, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            if (!positions[i].allFinite()) throw Error("color query at a non-finite position");
            field.encode_position(positions[i],
                                  std::span<double>(cache.values.data() + i * cache.dim, static_cast<std::size_t>(cache.dim)));
        }
    });
    return cache;
}

std::vector<Vec3> field_raw_outputs(std::span<const Vec3> positions, std::span<const Vec3> directions,
                                    const ColorField& field, const FeatureCache* cache) {
    const std::size_t n = positions.size();
    if (directions.size() != n) throw Error("direction count does not match positions");
    if (cache && (cache->count != n || cache->dim != field.config().feature_dim()))
        throw Error("feature cache does not match the positions");
    const auto fdim = static_cast<std::size_t>(field.config().feature_dim());
    std::vector<Vec3> out(n);
    const std::size_t chunks = (n + kMlpChunk - 1) / kMlpChunk;
    parallel_for(chunks, [&](std::size_t cb, std::size_t ce) {
        std::vector<double> features;
        for (std::size_t chunk = cb; chunk < ce; ++chunk) {
            const std::size_t begin = chunk * kMlpChunk, rows = std::min(kMlpChunk, n - begin);
            std::span<const double> feats;
            if (cache) {
                feats = std::span<const double>(cache->values.data() + begin * fdim, rows * fdim);
            } else {
                features.resize(rows * fdim);
                for (std::size_t r = 0; r < rows; ++r) {
                    if (!positions[begin + r].allFinite()) throw Error("color query at a non-finite position");
                    field.encode_position(positions[begin + r], std::span<double>(features.data() + r * fdim, fdim));
                }
                feats = features;
            }
            field.mlp_forward(feats, directions.subspan(begin, rows), std::span<Vec3>(out.data() + begin, rows));
        }
    });
    return out;
}

std::vector<Vec3> field_colors(std::span<const Vec3> positions, const Vec3& camera_center, const ColorField& field,
                               const FeatureCache* cache) {
    std::vector<Vec3> dirs(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) dirs[i] = safe_direction(positions[i] - camera_center);
    auto out = field_raw_outputs(positions, dirs, field, cache);
    for (Vec3& c : out) c = sh_dc_to_rgb(c);
    return out;
}

std::vector<double> field_backward(const ColorField& field, std::span<const Vec3> positions,
                                   std::span<const Vec3> directions, std::span<const Vec3> rgb_gradients) {
    const std::size_t n = positions.size();
    if (directions.size() != n || rgb_gradients.size() != n) throw Error("field backward shape mismatch");
    const FieldConfig& config = field.config();
    const auto fdim = static_cast<std::size_t>(config.feature_dim());
    const int fpl = config.features_per_level;
    const auto dims = layer_dims(config);
    std::vector<double> grad(field.parameters().size(), 0.0);
    const std::size_t mlp_offset = field.table_parameter_count();
    std::vector<std::size_t> table_offsets;
    {
        std::size_t offset = 0;
        for (const auto& level : field.layout()) {
            table_offsets.push_back(offset);
            offset += static_cast<std::size_t>(level.table_size) * fpl;
        }
    }

    std::vector<double> features;
    std::vector<GridFootprint> footprints;
    std::vector<Vec3> dirs;
    for (std::size_t begin = 0; begin < n; begin += kMlpChunk) {
        const std::size_t rows = std::min(kMlpChunk, n - begin);
        features.resize(rows * fdim);
        footprints.resize(rows);
        dirs.resize(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            field.hash_encode(contract_to_unit(positions[begin + r]),
                              std::span<double>(features.data() + r * fdim, fdim), &footprints[r]);
            dirs[r] = safe_direction(directions[begin + r]);
        }
        MlpTape tape;
        const RowMatrix out = run_mlp(config, field.mlp_parameters(),
                                      assemble_input(config, features.data(), dirs.data(), rows), &tape);

        RowMatrix delta(static_cast<Eigen::Index>(rows), 3);
        for (std::size_t r = 0; r < rows; ++r) {
            for (int c = 0; c < 3; ++c) {
                const double v = 0.5 + kShC0 * out(static_cast<Eigen::Index>(r), c);
                const bool clamped = v < 0.0 || v > 1.0;
                delta(static_cast<Eigen::Index>(r), c) = clamped ? 0.0 : kShC0 * rgb_gradients[begin + r][c];
            }
        }

        // Walk layers backwards; offsets of each layer's weights and biases.
        std::vector<std::size_t> w_offsets;
        {
            std::size_t offset = mlp_offset;
            for (std::size_t layer = 0; layer + 1 < dims.size(); ++layer) {
                w_offsets.push_back(offset);
                offset += static_cast<std::size_t>(dims[layer]) * dims[layer + 1] + dims[layer + 1];
            }
        }
        const auto params = field.parameters();
        for (std::size_t layer = dims.size() - 1; layer-- > 0;) {
            const int in = dims[layer], outd = dims[layer + 1];
            const RowMatrix& x = tape.activations[layer];
            Eigen::Map<RowMatrix> gw(grad.data() + w_offsets[layer], in, outd);
            Eigen::Map<Eigen::RowVectorXd> gb(grad.data() + w_offsets[layer] + static_cast<std::size_t>(in) * outd, outd);
            // Reductions are evaluated into owned (aligned) storage first: Eigen
            // sums packet and scalar lanes in different orders, so reducing
            // straight into a map would make rounding depend on its address.
            const RowMatrix layer_grad = x.transpose() * delta;
            const Eigen::RowVectorXd bias_grad = delta.colwise().sum();
            gw += layer_grad;
            gb += bias_grad;
            const RowMatrix w = Eigen::Map<const RowMatrix>(params.data() + w_offsets[layer], in, outd);
            RowMatrix prev = delta * w.transpose();
            if (layer > 0) prev = prev.cwiseProduct((tape.pre[layer - 1].array() > 0.0).cast<double>().matrix());
            delta = std::move(prev);
        }

        for (std::size_t r = 0; r < rows; ++r) {
            const GridFootprint& fp = footprints[r];
            for (std::size_t l = 0; l < fp.slots.size(); ++l) {
                for (int corner = 0; corner < 8; ++corner) {
                    const double w = fp.weights[l][corner];
                    if (w == 0.0) continue;
                    double* g = grad.data() + table_offsets[l] + static_cast<std::size_t>(fp.slots[l][corner]) * fpl;
                    for (int f = 0; f < fpl; ++f)
                        g[f] += w * delta(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l * fpl + f));
                }
            }
        }
    }
    return grad;
}

double distill_learning_rate(const DistillConfig& config, std::size_t iteration) {
    double lr = config.lr;
    for (double mark : config.decay_marks) {
        const auto at = static_cast<std::size_t>(std::llround(mark * static_cast<double>(config.iterations)));
        if (iteration >= at) lr *= config.decay_factor;
    }
    return lr;
}

namespace {

Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    for (;;) {
        const Vec3 v(normal(rng), normal(rng), normal(rng));
        const double norm = v.norm();
        if (norm > 1e-12) return v / norm;
    }
}

void check_divergence(double loss, double initial, const DistillConfig& config, std::size_t it) {
    if (!std::isfinite(loss)) throw TrainingError("non-finite color field loss", it);
    if (initial > 0.0 && loss > initial * config.divergence_factor)
        throw TrainingError("color field training diverged", it);
}

}  // namespace

DistillResult distill_train(const GaussianCloud& cloud, ColorField& field, const DistillConfig& config,
                            std::span<const CameraPose> cameras) {
    DistillResult result;
    if (cloud.empty() || config.iterations == 0) return result;
    if (config.batch_size == 0) throw Error("distillation batch size must be positive");
    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<std::size_t> pick(0, cloud.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_cam(0, cameras.empty() ? 0 : cameras.size() - 1);
    Adam opt(field.parameters().size(), Adam::Options{config.lr, 0.9, 0.99, 1e-15});
    const int bases = cloud.sh_bases();

    std::vector<Vec3> positions(config.batch_size), dirs(config.batch_size), targets(config.batch_size);
    std::vector<Vec3> rgb_grads(config.batch_size);
    double initial = 0.0;
    for (std::size_t it = 0; it < config.iterations; ++it) {
        for (std::size_t b = 0; b < config.batch_size; ++b) {
            const std::size_t n = pick(rng);
            positions[b] = cloud.positions[n];
            dirs[b] = cameras.empty() ? random_unit(rng) : safe_direction(cloud.positions[n] - cameras[pick_cam(rng)].center);
            if (dirs[b].isZero(0.0)) dirs[b] = random_unit(rng);
            targets[b] = evaluate_sh(cloud.sh_of(n), bases, dirs[b]);
        }
        const auto raw = field_raw_outputs(positions, dirs, field);
        double loss = 0.0;
        const double norm = 1.0 / (3.0 * static_cast<double>(config.batch_size));
        for (std::size_t b = 0; b < config.batch_size; ++b) {
            const Vec3 diff = sh_dc_to_rgb(raw[b]) - targets[b];
            loss += diff.squaredNorm() * norm;
            rgb_grads[b] = 2.0 * norm * diff;
        }
        if (it == 0) initial = loss;
        check_divergence(loss, initial, config, it);
        result.losses.push_back(loss);
        const auto grad = field_backward(field, positions, dirs, rgb_grads);
        opt.set_lr(distill_learning_rate(config, it));
        opt.step(field.parameters(), grad);
    }
    result.final_loss = result.losses.back();
    return result;
}

DistillResult train_field_end_to_end(const GaussianCloud& cloud, ColorField& field,
                                     std::span<const CameraPose> views, std::span<const Image> references,
                                     const DistillConfig& config, const RenderSettings& settings) {
    if (views.size() != references.size() || views.empty())
        throw Error("end-to-end field training needs one reference image per view");
    DistillResult result;
    if (cloud.empty() || config.iterations == 0) return result;
    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<std::size_t> pick(0, views.size() - 1);
    Adam opt(field.parameters().size(), Adam::Options{config.lr, 0.9, 0.99, 1e-15});
    std::vector<Vec3> dirs(cloud.size());
    double initial = 0.0;
    RenderTape tape;
    for (std::size_t it = 0; it < config.iterations; ++it) {
        const std::size_t v = pick(rng);
        const CameraPose& pose = views[v];
        for (std::size_t i = 0; i < cloud.size(); ++i) dirs[i] = safe_direction(cloud.positions[i] - pose.center);
        const auto colors = field_colors(cloud.positions, pose.center, field);
        SplatView view{cloud.positions, cloud.rotations, cloud.scales, cloud.opacities, colors, {}};
        const Image image = rasterize(view, pose, settings, &tape);
        const LossResult loss = render_loss(image, references[v]);
        if (it == 0) initial = loss.value;
        check_divergence(loss.value, initial, config, it);
        result.losses.push_back(loss.value);
        const SplatGradients grads = backward(loss.gradient, view, tape);
        const auto grad = field_backward(field, cloud.positions, dirs, grads.color);
        opt.set_lr(distill_learning_rate(config, it));
        opt.step(field.parameters(), grad);
    }
    result.final_loss = result.losses.back();
    return result;
}

double field_mean_abs_error(const GaussianCloud& cloud, const ColorField& field, std::size_t samples,
                            std::uint64_t seed) {
    if (cloud.empty() || samples == 0) return 0.0;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, cloud.size() - 1);
    double sum = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        const std::size_t n = pick(rng);
        const Vec3 d = random_unit(rng);
        const Vec3 diff = field.query_color(cloud.positions[n], d) - evaluate_sh(cloud.sh_of(n), cloud.sh_bases(), d);
        sum += diff.cwiseAbs().sum() / 3.0;
    }
    return sum / static_cast<double>(samples);
}

}  // namespace gscodec
