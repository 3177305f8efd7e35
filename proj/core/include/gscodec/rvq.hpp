// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gscodec {

/// Row-major N x D matrix of doubles; the common currency for vector data.
struct VectorSet {
    std::size_t dim = 0;
    std::vector<double> values;

    VectorSet() = default;
    VectorSet(std::size_t n, std::size_t d) : dim(d), values(n * d, 0.0) {}

    std::size_t size() const { return dim == 0 ? 0 : values.size() / dim; }
    std::span<double> row(std::size_t i) { return {values.data() + i * dim, dim}; }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
};

/// L-stage residual codebooks. Codes are stored as float, stage-major,
/// code-major, component-minor, matching the on-disk layout.
struct RvqCodec {
    std::size_t dim = 0;
    std::size_t num_stages = 0;
    std::size_t codebook_size = 0;
    std::vector<float> codebooks;

    RvqCodec() = default;
    RvqCodec(std::size_t d, std::size_t stages, std::size_t size)
        : dim(d), num_stages(stages), codebook_size(size), codebooks(d * stages * size, 0.0f) {}

    std::span<const float> code(std::size_t stage, std::size_t k) const {
        return {codebooks.data() + (stage * codebook_size + k) * dim, dim};
    }
    std::span<float> code(std::size_t stage, std::size_t k) {
        return {codebooks.data() + (stage * codebook_size + k) * dim, dim};
    }

    /// Throws gscodec::Error unless the shape is consistent, stages >= 1,
    /// C >= 2 and every code is finite.
    void validate() const;
};

/// Per-Gaussian, per-stage code indices, stored stage-major.
struct IndexStream {
    std::size_t count = 0;
    std::size_t num_stages = 0;
    std::vector<std::uint16_t> indices;

    IndexStream() = default;
    IndexStream(std::size_t n, std::size_t stages) : count(n), num_stages(stages), indices(n * stages, 0) {}

    std::uint16_t at(std::size_t stage, std::size_t n) const { return indices[stage * count + n]; }
    std::uint16_t& at(std::size_t stage, std::size_t n) { return indices[stage * count + n]; }
};

struct KMeansOptions {
    std::size_t max_iterations = 100;
    std::uint64_t seed = 0;
};

/// Lloyd's algorithm with k-means++ seeding. Returns `clusters` centroids as
/// a clusters x D set. Empty clusters are reseeded to the point farthest
/// from its assigned centroid; with fewer distinct points than clusters the
/// surplus centroids duplicate existing ones. Throws on empty input.
VectorSet kmeans(const VectorSet& points, std::size_t clusters, const KMeansOptions& options = {});

/// Sum of squared distances from each point to its nearest centroid.
double kmeans_sse(const VectorSet& points, const VectorSet& centroids);

/// Index of the code nearest to `target` (squared L2; ties go to the lowest
/// index).
std::size_t nearest_code(const RvqCodec& codec, std::size_t stage, std::span<const double> target);

struct RvqEncoding {
    IndexStream stream;
    VectorSet reconstruction;
};

/// Greedy per-stage nearest-code search on the running residual.
RvqEncoding rvq_encode(const VectorSet& vectors, const RvqCodec& codec);

/// Cumulative code sum through `up_to_stage` stages (0 gives zero vectors).
/// Throws DecodeError on an index >= C.
VectorSet rvq_decode(const IndexStream& stream, const RvqCodec& codec, std::size_t up_to_stage);
VectorSet rvq_decode(const IndexStream& stream, const RvqCodec& codec);

/// Mean squared reconstruction error per vector after `stage` stages.
double rvq_distortion(const VectorSet& vectors, const VectorSet& reconstruction);

/// Codebook objective: (1/(N C)) sum_k sum_n || r_n - rhat_n^{k-1} - Z^k[i_n^k] ||^2.
double codebook_loss(const VectorSet& vectors, const RvqCodec& codec, const IndexStream& stream);

/// Gradient of codebook_loss w.r.t. the codes, laid out like codec.codebooks.
/// Inputs are treated as constants; only selected codes receive gradient.
std::vector<double> codebook_loss_gradient(const VectorSet& vectors, const RvqCodec& codec,
                                           const IndexStream& stream);

struct RvqTrainOptions {
    std::size_t codebook_size = 64;
    std::size_t num_stages = 6;
    std::size_t iterations = 1000;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    KMeansOptions kmeans{};
};

struct RvqTrainResult {
    RvqCodec codec;
    IndexStream stream;
    double kmeans_distortion = 0.0;  // after initialization only
    double final_distortion = 0.0;
};

/// Stage-wise k-means initialization followed by `iterations` refinement
/// steps (re-encode, Adam step on codebook_loss). The returned codec is the
/// best one seen by final reconstruction distortion, so it is never worse
/// than the k-means initialization.
RvqTrainResult train_rvq(const VectorSet& vectors, const RvqTrainOptions& options);

}  // namespace gscodec
