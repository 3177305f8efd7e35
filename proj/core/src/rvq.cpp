// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include "gscodec/rvq.hpp"

#include "gscodec/adam.hpp"
#include "gscodec/error.hpp"
#include "gscodec/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace gscodec {

namespace {

template <typename A, typename B>
double squared_distance(std::span<A> a, std::span<B> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        sum += d * d;
    }
    return sum;
}

std::size_t nearest_row(const VectorSet& centroids, std::span<const double> point, double* best_distance) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < centroids.size(); ++k) {
        const double d = squared_distance(centroids.row(k), point);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    if (best_distance) *best_distance = best_d;
    return best;
}

}  // namespace

void RvqCodec::validate() const {
    if (dim == 0) throw Error("codec dimension must be positive");
    if (num_stages < 1) throw Error("codec needs at least one stage");
    if (codebook_size < 2) throw Error("codebook size must be at least 2");
    if (codebook_size > 65536) throw Error("codebook size must fit 16-bit indices");
    if (codebooks.size() != dim * num_stages * codebook_size) throw Error("codebook array has the wrong size");
    for (float v : codebooks)
        if (!std::isfinite(v)) throw Error("codebook contains a non-finite value");
}

VectorSet kmeans(const VectorSet& points, std::size_t clusters, const KMeansOptions& options) {
    const std::size_t n = points.size();
    if (n == 0) throw Error("k-means needs at least one point");
    if (clusters == 0) throw Error("k-means needs at least one cluster");
    const std::size_t dim = points.dim;
    std::mt19937_64 rng(options.seed);

    VectorSet centroids(clusters, dim);
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    auto set_centroid = [&](std::size_t k, std::size_t p) {
        std::copy_n(points.row(p).begin(), dim, centroids.row(k).begin());
        for (std::size_t i = 0; i < n; ++i)
            nearest[i] = std::min(nearest[i], squared_distance(points.row(i), centroids.row(k)));
    };

    set_centroid(0, std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    for (std::size_t k = 1; k < clusters; ++k) {
        double total = 0.0;
        for (double d : nearest) total += d;
        std::size_t pick = 0;
        if (total > 0.0) {
            double target = std::uniform_real_distribution<double>(0.0, total)(rng);
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                target -= nearest[i];
                if (target < 0.0 && nearest[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        }
        set_centroid(k, pick);
    }

    std::vector<std::size_t> assign(n, clusters);
    std::vector<double> dist(n, 0.0);
    std::vector<double> sums(clusters * dim);
    std::vector<std::size_t> counts(clusters);
    for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = nearest_row(centroids, points.row(i), &dist[i]);
            if (k != assign[i]) {
                assign[i] = k;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;

        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[assign[i]];
            const auto p = points.row(i);
            for (std::size_t c = 0; c < dim; ++c) sums[assign[i] * dim + c] += p[c];
        }
        for (std::size_t k = 0; k < clusters; ++k) {
            if (counts[k] == 0) continue;
            for (std::size_t c = 0; c < dim; ++c)
                centroids.row(k)[c] = sums[k * dim + c] / static_cast<double>(counts[k]);
        }
        for (std::size_t k = 0; k < clusters; ++k) {
            if (counts[k] != 0) continue;
            const std::size_t far =
                static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
            std::copy_n(points.row(far).begin(), dim, centroids.row(k).begin());
            dist[far] = 0.0;
            changed = true;
        }
    }
    return centroids;
}

double kmeans_sse(const VectorSet& points, const VectorSet& centroids) {
    double sse = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        double d = 0.0;
        nearest_row(centroids, points.row(i), &d);
        sse += d;
    }
    return sse;
}

std::size_t nearest_code(const RvqCodec& codec, std::size_t stage, std::span<const double> target) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < codec.codebook_size; ++k) {
        const double d = squared_distance(codec.code(stage, k), target);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

RvqEncoding rvq_encode(const VectorSet& vectors, const RvqCodec& codec) {
    if (vectors.size() != 0 && vectors.dim != codec.dim) throw Error("vector dimension does not match the codec");
    const std::size_t n = vectors.size(), dim = codec.dim;
    RvqEncoding out{IndexStream(n, codec.num_stages), VectorSet(n, dim)};
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        std::vector<double> residual(dim);
        for (std::size_t i = begin; i < end; ++i) {
            const auto v = vectors.row(i);
            auto rec = out.reconstruction.row(i);
            for (std::size_t s = 0; s < codec.num_stages; ++s) {
                for (std::size_t c = 0; c < dim; ++c) residual[c] = v[c] - rec[c];
                const std::size_t k = nearest_code(codec, s, residual);
                out.stream.at(s, i) = static_cast<std::uint16_t>(k);
                const auto code = codec.code(s, k);
                for (std::size_t c = 0; c < dim; ++c) rec[c] += static_cast<double>(code[c]);
            }
        }
    });
    return out;
}

VectorSet rvq_decode(const IndexStream& stream, const RvqCodec& codec, std::size_t up_to_stage) {
    if (up_to_stage > codec.num_stages || up_to_stage > stream.num_stages)
        throw Error("requested more stages than the codec holds");
    if (stream.indices.size() != stream.count * stream.num_stages)
        throw DecodeError(DecodeError::Code::malformed, "index stream size mismatch");
    VectorSet out(stream.count, codec.dim);
    for (std::size_t s = 0; s < up_to_stage; ++s) {
        for (std::size_t i = 0; i < stream.count; ++i) {
            const std::size_t k = stream.at(s, i);
            if (k >= codec.codebook_size)
                throw DecodeError(DecodeError::Code::index_out_of_range,
                                  "code index " + std::to_string(k) + " out of range");
            const auto code = codec.code(s, k);
            auto rec = out.row(i);
            for (std::size_t c = 0; c < codec.dim; ++c) rec[c] += static_cast<double>(code[c]);
        }
    }
    return out;
}

VectorSet rvq_decode(const IndexStream& stream, const RvqCodec& codec) {
    return rvq_decode(stream, codec, codec.num_stages);
}

double rvq_distortion(const VectorSet& vectors, const VectorSet& reconstruction) {
    if (vectors.values.size() != reconstruction.values.size()) throw Error("distortion of mismatched sets");
    if (vectors.size() == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < vectors.values.size(); ++i) {
        const double d = vectors.values[i] - reconstruction.values[i];
        sum += d * d;
    }
    return sum / static_cast<double>(vectors.size());
}

double codebook_loss(const VectorSet& vectors, const RvqCodec& codec, const IndexStream& stream) {
    const std::size_t n = vectors.size(), dim = codec.dim;
    if (n == 0) return 0.0;
    double sum = 0.0;
    std::vector<double> rec(dim);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(rec.begin(), rec.end(), 0.0);
        const auto v = vectors.row(i);
        for (std::size_t s = 0; s < stream.num_stages; ++s) {
            const auto code = codec.code(s, stream.at(s, i));
            for (std::size_t c = 0; c < dim; ++c) {
                const double d = v[c] - rec[c] - code[c];
                sum += d * d;
                rec[c] += code[c];
            }
        }
    }
    return sum / (static_cast<double>(n) * static_cast<double>(codec.codebook_size));
}

std::vector<double> codebook_loss_gradient(const VectorSet& vectors, const RvqCodec& codec,
                                           const IndexStream& stream) {
    const std::size_t n = vectors.size(), dim = codec.dim;
    std::vector<double> grad(codec.codebooks.size(), 0.0);
    if (n == 0) return grad;
    const double scale = 2.0 / (static_cast<double>(n) * static_cast<double>(codec.codebook_size));
    std::vector<double> rec(dim);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(rec.begin(), rec.end(), 0.0);
        const auto v = vectors.row(i);
        for (std::size_t s = 0; s < stream.num_stages; ++s) {
            const std::size_t k = stream.at(s, i);
            const auto code = codec.code(s, k);
            double* g = grad.data() + (s * codec.codebook_size + k) * dim;
            for (std::size_t c = 0; c < dim; ++c) {
                g[c] += scale * (code[c] - (v[c] - rec[c]));
                rec[c] += code[c];
            }
        }
    }
    return grad;
}

RvqTrainResult train_rvq(const VectorSet& vectors, const RvqTrainOptions& options) {
    const std::size_t n = vectors.size(), dim = vectors.dim;
    if (n == 0) throw Error("R-VQ training needs at least one vector");
    RvqCodec codec(dim, options.num_stages, options.codebook_size);
    codec.validate();

    VectorSet residual = vectors;
    for (std::size_t s = 0; s < options.num_stages; ++s) {
        KMeansOptions km = options.kmeans;
        km.seed = options.kmeans.seed + options.seed * 7919 + s;
        const VectorSet centroids = kmeans(residual, options.codebook_size, km);
        for (std::size_t k = 0; k < options.codebook_size; ++k) {
            auto code = codec.code(s, k);
            for (std::size_t c = 0; c < dim; ++c) code[c] = static_cast<float>(centroids.row(k)[c]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            auto r = residual.row(i);
            const auto code = codec.code(s, nearest_code(codec, s, r));
            for (std::size_t c = 0; c < dim; ++c) r[c] -= static_cast<double>(code[c]);
        }
    }

    RvqEncoding encoding = rvq_encode(vectors, codec);
    RvqTrainResult result;
    result.kmeans_distortion = rvq_distortion(vectors, encoding.reconstruction);
    result.codec = codec;
    result.stream = encoding.stream;
    result.final_distortion = result.kmeans_distortion;

    std::vector<double> params(codec.codebooks.begin(), codec.codebooks.end());
    Adam opt(params.size(), Adam::Options{options.lr, 0.9, 0.999, 1e-15});
    for (std::size_t it = 0; it < options.iterations; ++it) {
        const auto grad = codebook_loss_gradient(vectors, codec, encoding.stream);
        opt.step(params, grad);
        for (std::size_t j = 0; j < params.size(); ++j) codec.codebooks[j] = static_cast<float>(params[j]);
        encoding = rvq_encode(vectors, codec);
        const double distortion = rvq_distortion(vectors, encoding.reconstruction);
        if (distortion < result.final_distortion) {
            result.final_distortion = distortion;
            result.codec = codec;
            result.stream = encoding.stream;
        }
    }
    return result;
}

}  // namespace gscodec
