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
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnnassoc/ad/ops.hpp"
#include "gnnassoc/ad/tensor.hpp"
#include "gnnassoc/scenario.hpp"

namespace gnnassoc::phy {

inline constexpr double kRowSumTolerance = 1e-9;

/// K x M association matrix; row k is UE k's distribution over BSs.
struct AssociationMatrix {
    enum class Mode { hard, soft };

    ad::Tensor values;
    Mode mode = Mode::hard;

    std::size_t num_ue() const { return values.rows(); }
    std::size_t num_bs() const { return values.cols(); }
    double operator()(std::size_t k, std::size_t m) const { return values.at(k, m); }

    static AssociationMatrix one_hot(std::span<const std::size_t> serving_bs, std::size_t num_bs) {
        AssociationMatrix a{ad::Tensor::matrix(serving_bs.size(), num_bs), Mode::hard};
        for (std::size_t k = 0; k < serving_bs.size(); ++k) {
            if (serving_bs[k] >= num_bs) throw std::invalid_argument("one_hot: BS index out of range");
            a.values.at(k, serving_bs[k]) = 1.0;
        }
        return a;
    }

    static AssociationMatrix soft(ad::Tensor rows) {
        AssociationMatrix a{std::move(rows), Mode::soft};
        a.values = a.values.reshaped({a.values.rows(), a.values.cols()});
        return a;
    }

    /// Argmax per row, lowest index on ties.
    std::vector<std::size_t> serving_bs() const {
        std::vector<std::size_t> out(num_ue());
        for (std::size_t k = 0; k < num_ue(); ++k) {
            std::size_t best = 0;
            for (std::size_t m = 1; m < num_bs(); ++m)
                if (values.at(k, m) > values.at(k, best)) best = m;
            out[k] = best;
        }
        return out;
    }

    AssociationMatrix hardened() const { return one_hot(serving_bs(), num_bs()); }

    /// Throws std::invalid_argument when a row leaves the simplex (or, in hard
    /// mode, is not exactly one-hot).
    void validate() const {
        for (std::size_t k = 0; k < num_ue(); ++k) {
            double s = 0.0;
            for (std::size_t m = 0; m < num_bs(); ++m) {
                const double a = values.at(k, m);
                if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("association entry outside [0, 1]");
                if (mode == Mode::hard && a != 0.0 && a != 1.0) {
                    throw std::invalid_argument("hard association entry is not 0 or 1");
                }
                s += a;
            }
            if (std::fabs(s - 1.0) > kRowSumTolerance) {
                throw std::invalid_argument("association row " + std::to_string(k) + " sums to " + std::to_string(s));
            }
        }
    }

    bool rows_one_hot() const {
        for (std::size_t k = 0; k < num_ue(); ++k) {
            std::size_t ones = 0;
            for (std::size_t m = 0; m < num_bs(); ++m) {
                const double a = values.at(k, m);
                if (a == 1.0) {
                    ++ones;
                } else if (a != 0.0) {
                    return false;
                }
            }
            if (ones != 1) return false;
        }
        return true;
    }
};

/// Complex beams v_{m,k} in C^N, indexed (m, k, n) with n fastest.
struct BeamformingTensor {
    std::size_t num_bs = 0, num_ue = 0, num_antennas = 0;
    std::vector<cplx> beams;

    BeamformingTensor() = default;
    BeamformingTensor(std::size_t M, std::size_t K, std::size_t N)
        : num_bs(M), num_ue(K), num_antennas(N), beams(M * K * N, cplx{0.0, 0.0}) {}

    std::span<cplx> beam(std::size_t m, std::size_t k) {
        return std::span<cplx>(beams).subspan((m * num_ue + k) * num_antennas, num_antennas);
    }
    std::span<const cplx> beam(std::size_t m, std::size_t k) const {
        return std::span<const cplx>(beams).subspan((m * num_ue + k) * num_antennas, num_antennas);
    }

    /// (M*K) x 2N real rows [Re v ; Im v], the edge feature layout.
    ad::Tensor to_real() const {
        const std::size_t N = num_antennas;
        ad::Tensor t = ad::Tensor::matrix(num_bs * num_ue, 2 * N);
        for (std::size_t e = 0; e < num_bs * num_ue; ++e) {
            for (std::size_t n = 0; n < N; ++n) {
                t[e * 2 * N + n] = beams[e * N + n].real();
                t[e * 2 * N + N + n] = beams[e * N + n].imag();
            }
        }
        return t;
    }

    static BeamformingTensor from_real(const ad::Tensor& t, std::size_t M, std::size_t K) {
        if (t.size() % (M * K) != 0 || (t.size() / (M * K)) % 2 != 0) {
            throw std::invalid_argument("BeamformingTensor::from_real: expected M*K rows of 2N reals");
        }
        const std::size_t N = t.size() / (M * K) / 2;
        BeamformingTensor v(M, K, N);
        for (std::size_t e = 0; e < M * K; ++e)
            for (std::size_t n = 0; n < N; ++n) v.beams[e * N + n] = cplx{t[e * 2 * N + n], t[e * 2 * N + N + n]};
        return v;
    }
};

/// Sum_k ||a_{k,m} v_{m,k}||^2 at BS m.
inline double transmitted_power(const AssociationMatrix& A, const BeamformingTensor& V, std::size_t m) {
    double p = 0.0;
    for (std::size_t k = 0; k < V.num_ue; ++k) {
        double nrm = 0.0;
        for (auto x : V.beam(m, k)) nrm += std::norm(x);
        p += A(k, m) * A(k, m) * nrm;
    }
    return p;
}

namespace detail {

inline void check_projection_shapes(std::size_t vt_size, const AssociationMatrix& A, std::size_t powers) {
    const std::size_t M = A.num_bs(), K = A.num_ue();
    if (powers != M) throw std::invalid_argument("project_beamforming: need one power per BS");
    if (M * K == 0 || vt_size % (M * K) != 0 || (vt_size / (M * K)) % 2 != 0) {
        throw std::invalid_argument("project_beamforming: Vtilde must hold M*K rows of 2N reals");
    }
}

}  // namespace detail

/// Scales the beams of BS m so that sum_k ||a_{k,m} v_{m,k}||^2 = P_m (exactly
/// for hard rows). Returns v (not a*v); a BS whose associated beams carry no
/// energy gets all-zero beams.
inline BeamformingTensor project_beamforming(const ad::Tensor& vtilde, const AssociationMatrix& A,
                                             std::span<const double> power_w) {
    detail::check_projection_shapes(vtilde.size(), A, power_w.size());
    const std::size_t M = A.num_bs(), K = A.num_ue();
    BeamformingTensor V = BeamformingTensor::from_real(vtilde, M, K);
    for (std::size_t m = 0; m < M; ++m) {
        if (!(power_w[m] > 0.0)) throw std::invalid_argument("project_beamforming: BS power must be > 0");
        double energy = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            double nrm = 0.0;
            for (auto x : V.beam(m, k)) nrm += std::norm(x);
            energy += A(k, m) * nrm;
        }
        const double scale = energy > 0.0 ? std::sqrt(power_w[m]) / std::sqrt(energy) : 0.0;
        for (std::size_t k = 0; k < K; ++k)
            for (auto& x : V.beam(m, k)) x *= scale;
    }
    return V;
}

/// gamma_k = |sum_m a_{k,m} h_{m,k}^T v_{m,k}|^2 /
///           (sum_{l != k} |sum_m a_{l,m} h_{m,k}^T v_{m,l}|^2 + sigma_k^2).
/// The unconjugated transpose is used in both terms.
inline std::vector<double> sinr(const Scenario& s, const AssociationMatrix& A, const BeamformingTensor& V) {
    const std::size_t M = s.num_bs, K = s.num_ue, N = s.num_antennas;
    if (A.num_bs() != M || A.num_ue() != K || V.num_bs != M || V.num_ue != K || V.num_antennas != N) {
        throw std::invalid_argument("sinr: shape mismatch between scenario, association and beams");
    }
    std::vector<double> gamma(K);
    for (std::size_t k = 0; k < K; ++k) {
        if (!(s.ue_noise_w[k] > 0.0)) throw std::invalid_argument("sinr: noise power must be > 0");
        double signal = 0.0, interference = 0.0;
        for (std::size_t l = 0; l < K; ++l) {
            cplx z{0.0, 0.0};
            for (std::size_t m = 0; m < M; ++m) {
                const auto h = s.channel(m, k);
                const auto v = V.beam(m, l);
                cplx hv{0.0, 0.0};
                for (std::size_t n = 0; n < N; ++n) hv += h[n] * v[n];
                z += A(l, m) * hv;
            }
            (l == k ? signal : interference) += std::norm(z);
        }
        gamma[k] = signal / (interference + s.ue_noise_w[k]);
    }
    return gamma;
}

/// R = sum_k log2(1 + gamma_k), bps/Hz.
inline double sum_rate(std::span<const double> gamma) {
    double r = 0.0;
    for (double g : gamma) {
        if (g < 0.0) throw std::invalid_argument("sum_rate: negative SINR");
        r += std::log1p(g) / std::numbers::ln2;
    }
    return r;
}

inline double sum_rate(const Scenario& s, const AssociationMatrix& A, const BeamformingTensor& V) {
    return sum_rate(sinr(s, A, V));
}

// ---------------------------------------------------------------------------
// Tape versions. Association vars are K x M, beam vars are (M*K) x 2N.
// ---------------------------------------------------------------------------

inline ad::Var project_beamforming(ad::Var vtilde, ad::Var assoc, std::span<const double> power_w) {
    ad::Tape& t = *vtilde.tape;
    const std::size_t K = t.value(assoc).rows(), M = t.value(assoc).cols();
    const std::size_t rows = M * K;
    if (power_w.size() != M) throw std::invalid_argument("project_beamforming: need one power per BS");
    if (t.value(vtilde).rows() != rows || t.value(vtilde).cols() % 2 != 0) {
        throw std::invalid_argument("project_beamforming: Vtilde shape " + ad::shape_string(t.value(vtilde).shape()) +
                                    " does not match M*K x 2N");
    }
    std::vector<std::size_t> bs_of_row(rows);
    for (std::size_t e = 0; e < rows; ++e) bs_of_row[e] = e / K;

    ad::Var norms = ad::sum_cols(ad::square(vtilde));
    ad::Var a_flat = ad::reshape(ad::transpose(assoc), {rows, 1});
    ad::Var energy = ad::segment_sum(ad::mul(a_flat, norms), bs_of_row, M);

    const ad::Tensor& e = t.value(energy);
    ad::Tensor offset = ad::Tensor::matrix(M, 1), numer = ad::Tensor::matrix(M, 1);
    for (std::size_t m = 0; m < M; ++m) {
        if (!(power_w[m] > 0.0)) throw std::invalid_argument("project_beamforming: BS power must be > 0");
        const bool empty = !(e[m] > 0.0);
        offset[m] = empty ? 1.0 : 0.0;
        numer[m] = empty ? 0.0 : std::sqrt(power_w[m]);
    }
    ad::Var scale = ad::div(t.constant(numer), ad::sqrt(ad::add(energy, t.constant(offset))));
    return ad::mul(vtilde, ad::gather_rows(scale, bs_of_row));
}

/// K x 1 SINR vector.
inline ad::Var sinr(const Scenario& s, ad::Var assoc, ad::Var beams) {
    ad::Tape& t = *assoc.tape;
    const std::size_t M = s.num_bs, K = s.num_ue, N = s.num_antennas;
    if (t.value(assoc).rows() != K || t.value(assoc).cols() != M || t.value(beams).rows() != M * K ||
        t.value(beams).cols() != 2 * N) {
        throw std::invalid_argument("sinr: tape shapes do not match the scenario");
    }
    for (double n : s.ue_noise_w)
        if (!(n > 0.0)) throw std::invalid_argument("sinr: noise power must be > 0");

    ad::Var at = ad::transpose(assoc);
    ad::Var vr = ad::slice_cols(beams, 0, N);
    ad::Var vi = ad::slice_cols(beams, N, 2 * N);
    ad::Var zr{}, zi{};
    for (std::size_t m = 0; m < M; ++m) {
        ad::Tensor hr = ad::Tensor::matrix(K, N), hi = ad::Tensor::matrix(K, N);
        for (std::size_t k = 0; k < K; ++k) {
            const auto h = s.channel(m, k);
            for (std::size_t n = 0; n < N; ++n) {
                hr.at(k, n) = h[n].real();
                hi.at(k, n) = h[n].imag();
            }
        }
        ad::Var Hr = t.constant(std::move(hr)), Hi = t.constant(std::move(hi));
        ad::Var Vr = ad::slice_rows(vr, m * K, (m + 1) * K);
        ad::Var Vi = ad::slice_rows(vi, m * K, (m + 1) * K);
        // G[k, l] = h_{m,k}^T v_{m,l}, with column l weighted by a_{l,m}.
        ad::Var a_m = ad::slice_rows(at, m, m + 1);
        ad::Var gr = ad::mul(ad::sub(ad::matmul_nt(Hr, Vr), ad::matmul_nt(Hi, Vi)), a_m);
        ad::Var gi = ad::mul(ad::add(ad::matmul_nt(Hr, Vi), ad::matmul_nt(Hi, Vr)), a_m);
        zr = m == 0 ? gr : ad::add(zr, gr);
        zi = m == 0 ? gi : ad::add(zi, gi);
    }
    ad::Var power = ad::add(ad::square(zr), ad::square(zi));
    ad::Tensor diag = ad::Tensor::matrix(K, K), off = ad::Tensor::matrix(K, K, 1.0), noise = ad::Tensor::matrix(K, 1);
    for (std::size_t k = 0; k < K; ++k) {
        diag.at(k, k) = 1.0;
        off.at(k, k) = 0.0;
        noise[k] = s.ue_noise_w[k];
    }
    ad::Var signal = ad::sum_cols(ad::mul(power, t.constant(std::move(diag))));
    ad::Var interference = ad::sum_cols(ad::mul(power, t.constant(std::move(off))));
    return ad::div(signal, ad::add(interference, t.constant(std::move(noise))));
}

inline ad::Var sum_rate(ad::Var gamma) {
    return ad::scale(ad::sum(ad::log(ad::add_scalar(gamma, 1.0))), 1.0 / std::numbers::ln2);
}

// ---------------------------------------------------------------------------
// Beamforming rules and the exhaustive association oracle
// ---------------------------------------------------------------------------

/// Unit-norm MRT directions conj(h)/||h|| for every (m, k), as M*K x 2N reals.
inline ad::Tensor mrt_directions(const Scenario& s) {
    const std::size_t M = s.num_bs, K = s.num_ue, N = s.num_antennas;
    ad::Tensor t = ad::Tensor::matrix(M * K, 2 * N);
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t k = 0; k < K; ++k) {
            const auto h = s.channel(m, k);
            double nrm = 0.0;
            for (auto x : h) nrm += std::norm(x);
            nrm = std::sqrt(nrm);
            const std::size_t e = m * K + k;
            for (std::size_t n = 0; n < N; ++n) {
                const cplx v = nrm > 0.0 ? std::conj(h[n]) / nrm : cplx{0.0, 0.0};
                t[e * 2 * N + n] = v.real();
                t[e * 2 * N + N + n] = v.imag();
            }
        }
    }
    return t;
}

using BeamformerRule = std::function<BeamformingTensor(const Scenario&, const AssociationMatrix&)>;

/// MRT directions projected onto the power constraint: equal power per
/// associated UE at every BS.
inline BeamformingTensor mrt_rule(const Scenario& s, const AssociationMatrix& A) {
    return project_beamforming(mrt_directions(s), A, s.bs_power_w);
}

struct OracleResult {
    AssociationMatrix association;
    double sum_rate = 0.0;
};

inline constexpr double kBruteForceLimit = 1e5;

/// Exhaustive search over all M^K hard associations under `rule`.
inline OracleResult brute_force_best_association(const Scenario& s, const BeamformerRule& rule = mrt_rule) {
    const std::size_t M = s.num_bs, K = s.num_ue;
    if (std::pow(static_cast<double>(M), static_cast<double>(K)) > kBruteForceLimit) {
        throw std::invalid_argument("brute_force_best_association: M^K exceeds " + std::to_string(kBruteForceLimit));
    }
    std::vector<std::size_t> serving(K, 0);
    OracleResult best{AssociationMatrix::one_hot(serving, M), -1.0};
    while (true) {
        const auto A = AssociationMatrix::one_hot(serving, M);
        const double r = sum_rate(s, A, rule(s, A));
        if (r > best.sum_rate) best = {A, r};
        std::size_t k = 0;
        while (k < K && ++serving[k] == M) serving[k++] = 0;
        if (k == K) break;
    }
    return best;
}

}  // namespace gnnassoc::phy
