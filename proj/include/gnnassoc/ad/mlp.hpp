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
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnnassoc/ad/ops.hpp"
#include "gnnassoc/ad/tape.hpp"
#include "gnnassoc/ad/tensor.hpp"
#include "gnnassoc/rng.hpp"

namespace gnnassoc::ad {

/// Hidden-layer slope of the leaky rectifier. Output layers stay linear.
inline constexpr double kLeakySlope = 0.01;

struct DenseLayer {
    Tensor weight;  // in x out
    Tensor bias;    // 1 x out
};

/// Fully connected network: hidden layers use a leaky rectifier, the last
/// layer is linear.
struct MlpParams {
    std::vector<DenseLayer> layers;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().weight.rows(); }
    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().weight.cols(); }

    /// widths = {in, hidden..., out}. Entries uniform in +-1/sqrt(fan_in).
    static MlpParams init(const std::vector<std::size_t>& widths, Rng& rng) {
        if (widths.size() < 2) throw std::invalid_argument("MlpParams::init: need at least input and output widths");
        MlpParams p;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            const std::size_t in = widths[l], out = widths[l + 1];
            if (in == 0 || out == 0) throw std::invalid_argument("MlpParams::init: zero width");
            const double bound = 1.0 / std::sqrt(static_cast<double>(in));
            DenseLayer layer{Tensor::matrix(in, out), Tensor::matrix(1, out)};
            for (double& w : layer.weight.storage()) w = rng.uniform(-bound, bound);
            for (double& b : layer.bias.storage()) b = rng.uniform(-bound, bound);
            p.layers.push_back(std::move(layer));
        }
        return p;
    }

    void validate() const {
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto& L = layers[l];
            if (L.bias.rows() != 1 || L.bias.cols() != L.weight.cols()) {
                throw std::invalid_argument("MlpParams: bias shape mismatch at layer " + std::to_string(l));
            }
            if (l > 0 && layers[l - 1].weight.cols() != L.weight.rows()) {
                throw std::invalid_argument("MlpParams: layer " + std::to_string(l) + " expects " +
                                            std::to_string(L.weight.rows()) + " inputs, previous layer emits " +
                                            std::to_string(layers[l - 1].weight.cols()));
            }
        }
    }
};

/// Tape handles of one MLP's parameters.
struct MlpVars {
    std::vector<Var> weights;
    std::vector<Var> biases;
};

inline MlpVars bind(Tape& tape, const MlpParams& params, bool requires_grad = true) {
    MlpVars v;
    for (const auto& L : params.layers) {
        v.weights.push_back(tape.leaf(L.weight, requires_grad));
        v.biases.push_back(tape.leaf(L.bias, requires_grad));
    }
    return v;
}

/// Applies the MLP row-wise to `input` (rows x in).
inline Var forward_mlp(const MlpVars& vars, Var input) {
    Tape& t = *input.tape;
    const std::size_t in = t.value(input).cols();
    if (vars.weights.empty()) throw std::invalid_argument("forward_mlp: empty MLP");
    if (t.value(vars.weights.front()).rows() != in) {
        throw std::invalid_argument("forward_mlp: input " + shape_string(t.value(input).shape()) +
                                    " does not match first layer " +
                                    shape_string(t.value(vars.weights.front()).shape()));
    }
    Var h = input;
    for (std::size_t l = 0; l < vars.weights.size(); ++l) {
        h = add(matmul(h, vars.weights[l]), vars.biases[l]);
        if (l + 1 < vars.weights.size()) h = leaky_relu(h, kLeakySlope);
    }
    return h;
}

inline Var forward_mlp(const MlpParams& params, Var input, Tape& tape) {
    return forward_mlp(bind(tape, params), input);
}

}  // namespace gnnassoc::ad
