/*
 * Copyright 2026 The gnnassoc Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnnassoc/ad/tensor.hpp"

namespace gnnassoc::ad {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::uint64_t step = 0;
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
};

/// Raised when a gradient holds a non-finite entry; no parameter is touched.
class NonFiniteGradient : public std::runtime_error {
public:
    NonFiniteGradient(std::size_t tensor_index, std::size_t entry)
        : std::runtime_error("adam_step: non-finite gradient in tensor " + std::to_string(tensor_index) +
                             " entry " + std::to_string(entry)),
          tensor_index_(tensor_index) {}
    std::size_t tensor_index() const noexcept { return tensor_index_; }

private:
    std::size_t tensor_index_;
};

/// One bias-corrected Adam update in place.
inline void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state, double lr,
                      const AdamConfig& cfg = {}) {
    if (params.size() != grads.size()) throw std::invalid_argument("adam_step: params/grads count mismatch");
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("adam_step: learning rate must be >= 0");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->size() != grads[i].size()) {
            throw std::invalid_argument("adam_step: shape mismatch for tensor " + std::to_string(i) + ": " +
                                        shape_string(params[i]->shape()) + " vs " + shape_string(grads[i].shape()));
        }
        for (std::size_t j = 0; j < grads[i].size(); ++j)
            if (!std::isfinite(grads[i][j])) throw NonFiniteGradient(i, j);
    }
    if (state.first_moment.empty()) {
        for (const Tensor* p : params) {
            state.first_moment.emplace_back(p->shape(), 0.0);
            state.second_moment.emplace_back(p->shape(), 0.0);
        }
    }
    if (state.first_moment.size() != params.size()) throw std::invalid_argument("adam_step: state size mismatch");

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        Tensor& m = state.first_moment[i];
        Tensor& v = state.second_moment[i];
        const Tensor& g = grads[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            p[j] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

}  // namespace gnnassoc::ad
