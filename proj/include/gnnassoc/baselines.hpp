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

#include <string>
#include <vector>

#include "gnnassoc/phy.hpp"
#include "gnnassoc/rng.hpp"
#include "gnnassoc/scenario.hpp"

namespace gnnassoc::baselines {

struct BaselineResult {
    std::string method;
    phy::AssociationMatrix association;
    phy::BeamformingTensor beams;
    double sum_rate = 0.0;
};

/// SINR of UE k from BS m when every BS serves every UE with unit MRT
/// directions at equal power P_m / K. Entry (k, m); interference counts every
/// other tentative beam received at k.
inline ad::Tensor tentative_sinr(const Scenario& s) {
    const std::size_t M = s.num_bs, K = s.num_ue, N = s.num_antennas;
    const ad::Tensor dirs = phy::mrt_directions(s);
    const auto V = phy::BeamformingTensor::from_real(dirs, M, K);
    // rx(k, m, l) = received power at UE k from BS m's beam for UE l.
    std::vector<double> rx(K * M * K);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t m = 0; m < M; ++m) {
            const auto h = s.channel(m, k);
            const double p = s.bs_power_w[m] / static_cast<double>(K);
            for (std::size_t l = 0; l < K; ++l) {
                cplx z{0.0, 0.0};
                const auto v = V.beam(m, l);
                for (std::size_t n = 0; n < N; ++n) z += h[n] * v[n];
                rx[(k * M + m) * K + l] = p * std::norm(z);
            }
        }
    ad::Tensor g = ad::Tensor::matrix(K, M);
    for (std::size_t k = 0; k < K; ++k) {
        double total = 0.0;
        for (std::size_t i = 0; i < M * K; ++i) total += rx[k * M * K + i];
        for (std::size_t m = 0; m < M; ++m) {
            const double signal = rx[(k * M + m) * K + k];
            g.at(k, m) = signal / (total - signal + s.ue_noise_w[k]);
        }
    }
    return g;
}

inline BaselineResult finish(std::string method, const Scenario& s, phy::AssociationMatrix A) {
    BaselineResult r{std::move(method), std::move(A), {}, 0.0};
    r.beams = phy::mrt_rule(s, r.association);
    r.sum_rate = phy::sum_rate(s, r.association, r.beams);
    return r;
}

/// Max-SINR association under the tentative configuration, then MRT beams with
/// an equal power split per BS.
inline BaselineResult mrt_max_sinr(const Scenario& s) {
    const ad::Tensor g = tentative_sinr(s);
    return finish("mrt_max_sinr", s, phy::AssociationMatrix::one_hot(phy::AssociationMatrix{g}.serving_bs(), s.num_bs));
}

/// Uniformly random serving BS per UE, then the same MRT beams.
inline BaselineResult random_association_mrt(const Scenario& s, Rng& rng) {
    std::vector<std::size_t> serving(s.num_ue);
    for (auto& m : serving) m = rng.below(s.num_bs);
    return finish("random_mrt", s, phy::AssociationMatrix::one_hot(serving, s.num_bs));
}

}  // namespace gnnassoc::baselines
