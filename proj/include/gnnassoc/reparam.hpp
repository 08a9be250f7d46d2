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

#include "gnnassoc/ad/ops.hpp"
#include "gnnassoc/ad/tensor.hpp"
#include "gnnassoc/rng.hpp"

namespace gnnassoc::reparam {

/// Floor applied to beta before the log.
inline constexpr double kBetaFloor = 1e-20;

enum class HeadMode { gs, stgs, softmax, softmax_st };
enum class EvalNoise { deterministic, stochastic };

inline std::string to_string(HeadMode m) {
    switch (m) {
        case HeadMode::gs: return "gs";
        case HeadMode::stgs: return "stgs";
        case HeadMode::softmax: return "softmax";
        case HeadMode::softmax_st: return "softmax_st";
    }
    return "?";
}

inline HeadMode head_mode_from_string(const std::string& s) {
    if (s == "gs") return HeadMode::gs;
    if (s == "stgs") return HeadMode::stgs;
    if (s == "softmax") return HeadMode::softmax;
    if (s == "softmax_st") return HeadMode::softmax_st;
    throw std::invalid_argument("unknown head mode '" + s + "' (expected gs, stgs, softmax, softmax_st)");
}

inline bool uses_gumbel(HeadMode m) { return m == HeadMode::gs || m == HeadMode::stgs; }
inline bool is_straight_through(HeadMode m) { return m == HeadMode::stgs || m == HeadMode::softmax_st; }

struct CategoricalHead {
    HeadMode mode = HeadMode::stgs;
    double temperature = 1.0;
    EvalNoise eval_noise = EvalNoise::deterministic;

    void validate() const {
        if (!(temperature > 0.0) || !std::isfinite(temperature)) {
            throw std::invalid_argument("head.temperature: must be in (0, inf)");
        }
    }
};

/// -log(-log(u)) for u in (0, 1).
inline double gumbel_from_uniform(double u) { return -std::log(-std::log(u)); }

/// i.i.d. standard Gumbel entries.
inline ad::Tensor sample_gumbel(ad::Shape shape, Rng& rng) {
    ad::Tensor g(std::move(shape));
    for (double& x : g.storage()) x = gumbel_from_uniform(rng.uniform_open());
    return g;
}

/// Row-wise one-hot of the argmax; ties go to the lowest index.
inline ad::Tensor one_hot_rows(const ad::Tensor& x) {
    const std::size_t r = x.rows(), c = x.cols();
    ad::Tensor out = ad::Tensor::matrix(r, c);
    for (std::size_t i = 0; i < r; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < c; ++j)
            if (x.at(i, j) > x.at(i, best)) best = j;
        out.at(i, best) = 1.0;
    }
    return out;
}

inline ad::Var log_beta(ad::Var beta) { return ad::log(ad::clamp_min(beta, kBetaFloor)); }

/// softmax((log beta + g) / tau), row-wise.
inline ad::Var gumbel_softmax(ad::Var beta, double tau, const ad::Tensor& g) {
    if (!(tau > 0.0)) throw std::invalid_argument("gumbel_softmax: temperature must be > 0");
    ad::Tape& t = *beta.tape;
    ad::Var logits = ad::add(log_beta(beta), t.constant(g.reshaped(ad::Shape{t.value(beta).rows(), t.value(beta).cols()})));
    return ad::softmax_rows(tau == 1.0 ? logits : ad::scale(logits, 1.0 / tau));
}

/// Forward value is the row-wise argmax one-hot of `soft`; gradient is soft's.
inline ad::Var straight_through(ad::Var soft) {
    return ad::straight_through(soft, one_hot_rows(soft.tape->value(soft)));
}

/// softmax(log beta) = beta / sum(beta), row-wise.
inline ad::Var softmax_head(ad::Var beta) { return ad::softmax_rows(log_beta(beta)); }

struct HeadOutput {
    ad::Var forward;  // what downstream ops consume
    ad::Var soft;     // d_GS or the plain softmax
    ad::Tensor hard;  // one-hot rows of soft
};

/// Applies the head to a K x M beta. `noise` supplies Gumbel draws; pass
/// nullptr for the noise-free decision (Gumbel modes then reduce to softmax
/// at temperature tau).
inline HeadOutput apply_head(ad::Var beta, const CategoricalHead& head, Rng* noise) {
    head.validate();
    ad::Tape& t = *beta.tape;
    const ad::Tensor& b = t.value(beta);
    HeadOutput out;
    if (uses_gumbel(head.mode)) {
        const ad::Shape shape{b.rows(), b.cols()};
        const ad::Tensor g = noise ? sample_gumbel(shape, *noise) : ad::Tensor(shape);
        out.soft = gumbel_softmax(beta, head.temperature, g);
    } else {
        out.soft = softmax_head(beta);
    }
    out.hard = one_hot_rows(t.value(out.soft));
    out.forward = is_straight_through(head.mode) ? ad::straight_through(out.soft, out.hard) : out.soft;
    return out;
}

}  // namespace gnnassoc::reparam
