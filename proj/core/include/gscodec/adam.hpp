// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace gscodec {

/// Adam with bias correction over a flat parameter array.
///
/// The epsilon default matches the splatting training convention (1e-15):
/// mask logits see gradients around 1e-9, which a 1e-8 epsilon would swamp.
class Adam {
public:
    struct Options {
        double lr = 1e-2;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-15;
    };

    Adam() = default;
    Adam(std::size_t size, Options options) : options_(options), m_(size, 0.0), v_(size, 0.0) {}

    void set_lr(double lr) { options_.lr = lr; }
    double lr() const { return options_.lr; }
    std::size_t size() const { return m_.size(); }
    std::size_t steps() const { return step_; }

    void step(std::span<double> params, std::span<const double> grads) {
        ++step_;
        const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(step_));
        const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(step_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = grads[i];
            m_[i] = options_.beta1 * m_[i] + (1.0 - options_.beta1) * g;
            v_[i] = options_.beta2 * v_[i] + (1.0 - options_.beta2) * g * g;
            const double mhat = m_[i] / c1;
            const double vhat = v_[i] / c2;
            params[i] -= options_.lr * mhat / (std::sqrt(vhat) + options_.epsilon);
        }
    }

    /// Keeps only the moment entries listed in `kept` (in order).
    void compact(std::span<const std::size_t> kept) {
        std::vector<double> m, v;
        m.reserve(kept.size());
        v.reserve(kept.size());
        for (std::size_t k : kept) {
            m.push_back(m_[k]);
            v.push_back(v_[k]);
        }
        m_ = std::move(m);
        v_ = std::move(v);
    }

private:
    Options options_{};
    std::vector<double> m_, v_;
    std::size_t step_ = 0;
};

}  // namespace gscodec
