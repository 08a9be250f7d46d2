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

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "gnnassoc/ad/ops.hpp"
#include "gnnassoc/rng.hpp"

namespace gnnassoc::test_support {

inline ad::Tensor random_tensor(ad::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    ad::Tensor t(std::move(shape));
    for (double& x : t.storage()) x = rng.uniform(lo, hi);
    return t;
}

inline double relative_error(double analytic, double numeric, double floor = 1e-7) {
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), floor});
    return std::fabs(analytic - numeric) / denom;
}

/// Builds a scalar loss on a fresh tape from leaf inputs.
using LossBuilder = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

inline double eval_loss(const LossBuilder& build, const std::vector<ad::Tensor>& inputs) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.leaf(t));
    return tape.value(build(tape, vars)).item();
}

/// Worst relative error between tape gradients and central differences over
/// every entry of every input.
inline double max_gradient_error(const LossBuilder& build, std::vector<ad::Tensor> inputs, double h = 1e-5) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.leaf(t));
    tape.backward(build(tape, vars));
    double worst = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const ad::Tensor g = tape.grad(vars[i]);
        for (std::size_t j = 0; j < inputs[i].size(); ++j) {
            const double x0 = inputs[i][j];
            inputs[i][j] = x0 + h;
            const double fp = eval_loss(build, inputs);
            inputs[i][j] = x0 - h;
            const double fm = eval_loss(build, inputs);
            inputs[i][j] = x0;
            worst = std::max(worst, relative_error(g[j], (fp - fm) / (2.0 * h)));
        }
    }
    return worst;
}

}  // namespace gnnassoc::test_support
