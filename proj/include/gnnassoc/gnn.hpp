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
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gnnassoc/ad/mlp.hpp"
#include "gnnassoc/ad/ops.hpp"
#include "gnnassoc/phy.hpp"
#include "gnnassoc/reparam.hpp"
#include "gnnassoc/rng.hpp"
#include "gnnassoc/scenario.hpp"

namespace gnnassoc::gnn {

enum class Aggregation { mean, max };

inline std::string to_string(Aggregation a) { return a == Aggregation::mean ? "mean" : "max"; }

inline Aggregation aggregation_from_string(const std::string& s) {
    if (s == "mean") return Aggregation::mean;
    if (s == "max") return Aggregation::max;
    throw std::invalid_argument("unknown aggregation '" + s + "' (expected mean or max)");
}

struct GnnConfig {
    std::size_t num_layers = 2;  // L
    std::size_t d_bs = 64, d_ue = 64, d_edge = 64;
    std::size_t hidden_width = 128;
    std::size_t hidden_layers = 2;
    Aggregation aggregation = Aggregation::mean;
    reparam::CategoricalHead head;
    /// Appends a one-hot BS index to each BS input feature.
    bool bs_index_features = false;

    void validate() const {
        auto fail = [](const std::string& f, const std::string& why) {
            throw std::invalid_argument("gnn." + f + ": " + why);
        };
        if (num_layers < 1) fail("num_layers", "must be >= 1");
        if (d_bs < 1) fail("d_bs", "must be >= 1");
        if (d_ue < 1) fail("d_ue", "must be >= 1");
        if (d_edge < 1) fail("d_edge", "must be >= 1");
        if (hidden_width < 1) fail("hidden_width", "must be >= 1");
        head.validate();
    }
};

/// Input normalization: p / power_ref_dbm, q / noise_ref_dbm, H / channel_scale.
struct FeatureScaling {
    double power_ref_dbm = 30.0;
    double noise_ref_dbm = -84.0;
    double channel_scale = 1.0;
};

/// RMS of |h_{m,k,n}| over `samples` scenarios drawn from the calibration stream.
inline double calibrate_channel_scale(const ScenarioConfig& cfg, std::uint64_t root_seed, std::size_t samples = 256) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        const Scenario s = generate_scenario(cfg, derive_seed(root_seed, Stream::calibration, i));
        for (const auto& h : s.channels) acc += std::norm(h);
        count += s.channels.size();
    }
    const double rms = std::sqrt(acc / static_cast<double>(count));
    if (!(rms > 0.0)) throw std::runtime_error("calibrate_channel_scale: degenerate channels");
    return rms;
}

struct UpdateLayerParams {
    ad::MlpParams f1, f2, f3, f4, f5, f6;
};

struct GnnParams {
    GnnConfig config;
    std::size_t num_bs = 0;        // f7 output width
    std::size_t num_antennas = 0;  // beam width / 2
    FeatureScaling scaling;
    ad::MlpParams pre_bs, pre_ue, pre_edge;
    std::vector<UpdateLayerParams> layers;
    ad::MlpParams f7, beam;

    std::size_t bs_input_dim() const { return 1 + (config.bs_index_features ? num_bs : 0); }

    static GnnParams init(const GnnConfig& cfg, std::size_t M, std::size_t N, FeatureScaling scaling, Rng& rng) {
        cfg.validate();
        if (M < 1 || N < 1) throw std::invalid_argument("GnnParams::init: need M >= 1 and N >= 1");
        GnnParams p;
        p.config = cfg;
        p.num_bs = M;
        p.num_antennas = N;
        p.scaling = scaling;
        auto mlp = [&](std::size_t in, std::size_t out) {
            std::vector<std::size_t> w{in};
            for (std::size_t h = 0; h < cfg.hidden_layers; ++h) w.push_back(cfg.hidden_width);
            w.push_back(out);
            return ad::MlpParams::init(w, rng);
        };
        p.pre_bs = mlp(p.bs_input_dim(), cfg.d_bs);
        p.pre_ue = mlp(1, cfg.d_ue);
        p.pre_edge = mlp(2 * N, cfg.d_edge);
        for (std::size_t l = 0; l < cfg.num_layers; ++l) {
            UpdateLayerParams u;
            u.f1 = mlp(cfg.d_ue + cfg.d_edge, cfg.d_bs);
            u.f2 = mlp(2 * cfg.d_bs, cfg.d_bs);
            u.f3 = mlp(cfg.d_bs + cfg.d_edge, cfg.d_ue);
            u.f4 = mlp(2 * cfg.d_ue, cfg.d_ue);
            u.f5 = mlp(cfg.d_bs + cfg.d_ue, cfg.d_edge);
            u.f6 = mlp(2 * cfg.d_edge, cfg.d_edge);
            p.layers.push_back(std::move(u));
        }
        p.f7 = mlp(cfg.d_ue, M);
        p.beam = mlp(cfg.d_edge, 2 * N);
        return p;
    }

    /// Visits every MLP in a fixed order with a stable name.
    template <typename Self, typename F>
    static void visit_mlps(Self& self, F&& f) {
        f("pre_bs", self.pre_bs);
        f("pre_ue", self.pre_ue);
        f("pre_edge", self.pre_edge);
        for (std::size_t l = 0; l < self.layers.size(); ++l) {
            auto& u = self.layers[l];
            const std::string pre = "layer" + std::to_string(l) + ".";
            f(pre + "f1", u.f1);
            f(pre + "f2", u.f2);
            f(pre + "f3", u.f3);
            f(pre + "f4", u.f4);
            f(pre + "f5", u.f5);
            f(pre + "f6", u.f6);
        }
        f("f7", self.f7);
        f("beam", self.beam);
    }

    /// Parameter tensors in visit order, named "<mlp>.<layer>.weight|bias".
    std::vector<std::pair<std::string, ad::Tensor*>> named_tensors() {
        std::vector<std::pair<std::string, ad::Tensor*>> out;
        visit_mlps(*this, [&](const std::string& name, ad::MlpParams& m) {
            for (std::size_t i = 0; i < m.layers.size(); ++i) {
                out.emplace_back(name + "." + std::to_string(i) + ".weight", &m.layers[i].weight);
                out.emplace_back(name + "." + std::to_string(i) + ".bias", &m.layers[i].bias);
            }
        });
        return out;
    }

    std::vector<std::pair<std::string, const ad::Tensor*>> named_tensors() const {
        std::vector<std::pair<std::string, const ad::Tensor*>> out;
        for (auto& [n, t] : const_cast<GnnParams*>(this)->named_tensors()) out.emplace_back(n, t);
        return out;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& [name, t] : named_tensors()) n += t->size();
        return n;
    }
};

struct UpdateLayerVars {
    ad::MlpVars f1, f2, f3, f4, f5, f6;
};

/// Tape leaves for one forward/backward pass, in named_tensors() order.
struct GnnVars {
    ad::MlpVars pre_bs, pre_ue, pre_edge;
    std::vector<UpdateLayerVars> layers;
    ad::MlpVars f7, beam;
    std::vector<ad::Var> leaves;
};

inline GnnVars bind(ad::Tape& tape, const GnnParams& p, bool requires_grad = true) {
    GnnVars v;
    auto b = [&](const ad::MlpParams& m) { return ad::bind(tape, m, requires_grad); };
    v.pre_bs = b(p.pre_bs);
    v.pre_ue = b(p.pre_ue);
    v.pre_edge = b(p.pre_edge);
    for (const auto& u : p.layers) v.layers.push_back({b(u.f1), b(u.f2), b(u.f3), b(u.f4), b(u.f5), b(u.f6)});
    v.f7 = b(p.f7);
    v.beam = b(p.beam);
    auto collect = [&](const ad::MlpVars& m) {
        for (std::size_t i = 0; i < m.weights.size(); ++i) {
            v.leaves.push_back(m.weights[i]);
            v.leaves.push_back(m.biases[i]);
        }
    };
    collect(v.pre_bs);
    collect(v.pre_ue);
    collect(v.pre_edge);
    for (const auto& u : v.layers)
        for (const auto* m : {&u.f1, &u.f2, &u.f3, &u.f4, &u.f5, &u.f6}) collect(*m);
    collect(v.f7);
    collect(v.beam);
    return v;
}

/// B: M x d_bs, C: K x d_ue, E: (M*K) x d_edge with edge row m*K + k.
struct GraphState {
    ad::Var B, C, E;
};

namespace detail {

struct EdgeIndex {
    std::vector<std::size_t> bs, ue;
};

inline EdgeIndex edge_index(std::size_t M, std::size_t K) {
    EdgeIndex ix;
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t k = 0; k < K; ++k) {
            ix.bs.push_back(m);
            ix.ue.push_back(k);
        }
    return ix;
}

inline ad::Var aggregate(ad::Var x, const std::vector<std::size_t>& segment, std::size_t n, Aggregation kind) {
    return kind == Aggregation::mean ? ad::segment_mean(x, segment, n) : ad::segment_max(x, segment, n);
}

}  // namespace detail

/// Scaled (p, q, H) inputs as tape constants.
struct GraphInputs {
    ad::Tensor bs, ue, edge;
};

inline GraphInputs make_inputs(const Scenario& s, const GnnParams& p) {
    const std::size_t M = s.num_bs, K = s.num_ue, N = s.num_antennas;
    if (M != p.num_bs) {
        throw std::invalid_argument("gnn: model was built for " + std::to_string(p.num_bs) + " BSs, scenario has " +
                                    std::to_string(M));
    }
    if (N != p.num_antennas) {
        throw std::invalid_argument("gnn: model was built for " + std::to_string(p.num_antennas) +
                                    " antennas, scenario has " + std::to_string(N));
    }
    GraphInputs in;
    in.bs = ad::Tensor::matrix(M, p.bs_input_dim());
    for (std::size_t m = 0; m < M; ++m) {
        in.bs.at(m, 0) = s.bs_power_dbm[m] / p.scaling.power_ref_dbm;
        if (p.config.bs_index_features) in.bs.at(m, 1 + m) = 1.0;
    }
    in.ue = ad::Tensor::matrix(K, 1);
    for (std::size_t k = 0; k < K; ++k) in.ue[k] = s.ue_noise_dbm[k] / p.scaling.noise_ref_dbm;
    in.edge = s.features.reshaped({M * K, 2 * N});
    for (double& x : in.edge.storage()) x /= p.scaling.channel_scale;
    return in;
}

inline GraphState preprocess(ad::Tape& tape, const GraphInputs& in, const GnnVars& v) {
    return {ad::forward_mlp(v.pre_bs, tape.constant(in.bs)), ad::forward_mlp(v.pre_ue, tape.constant(in.ue)),
            ad::forward_mlp(v.pre_edge, tape.constant(in.edge))};
}

inline GraphState update_layer(const GraphState& g, const UpdateLayerVars& f, std::size_t M, std::size_t K,
                               Aggregation agg) {
    const auto ix = detail::edge_index(M, K);
    ad::Var b_e = ad::gather_rows(g.B, ix.bs);  // b_m per edge
    ad::Var c_e = ad::gather_rows(g.C, ix.ue);  // c_k per edge

    ad::Var to_bs = ad::forward_mlp(f.f1, ad::concat_cols({c_e, g.E}));
    ad::Var B = ad::forward_mlp(f.f2, ad::concat_cols({g.B, detail::aggregate(to_bs, ix.bs, M, agg)}));

    ad::Var to_ue = ad::forward_mlp(f.f3, ad::concat_cols({b_e, g.E}));
    ad::Var C = ad::forward_mlp(f.f4, ad::concat_cols({g.C, detail::aggregate(to_ue, ix.ue, K, agg)}));

    // Each edge sees exactly one (b_m, c_k) pair, so its aggregation is the identity.
    ad::Var pair = ad::forward_mlp(f.f5, ad::concat_cols({b_e, c_e}));
    ad::Var E = ad::forward_mlp(f.f6, ad::concat_cols({g.E, pair}));
    return {B, C, E};
}

struct ForwardResult {
    GraphState state;
    ad::Var beta;      // K x M
    ad::Var assoc;     // forward association (K x M) consumed by projection and SINR
    ad::Var soft;      // soft association before any straight-through step
    ad::Var vtilde;    // (M*K) x 2N
    ad::Var beams;     // projected under `assoc`
    ad::Var rate;      // sum-rate under `assoc`
    ad::Var loss;      // -rate
    phy::AssociationMatrix hard;
    double hard_rate = 0.0;  // sum-rate with hard A and beams projected under hard A
};

/// Full forward pass. `noise` drives Gumbel draws; nullptr gives the
/// noise-free decision.
inline ForwardResult forward(ad::Tape& tape, const Scenario& s, const GnnParams& p, const GnnVars& v, Rng* noise) {
    const std::size_t M = s.num_bs, K = s.num_ue;
    const GraphInputs in = make_inputs(s, p);
    ForwardResult r;
    r.state = preprocess(tape, in, v);
    for (const auto& layer : v.layers) r.state = update_layer(r.state, layer, M, K, p.config.aggregation);

    r.beta = ad::abs(ad::forward_mlp(v.f7, r.state.C));
    const reparam::HeadOutput head = reparam::apply_head(r.beta, p.config.head, noise);
    r.assoc = head.forward;
    r.soft = head.soft;
    r.hard = phy::AssociationMatrix{head.hard, phy::AssociationMatrix::Mode::hard};

    r.vtilde = ad::forward_mlp(v.beam, r.state.E);
    r.beams = phy::project_beamforming(r.vtilde, r.assoc, s.bs_power_w);
    r.rate = phy::sum_rate(phy::sinr(s, r.assoc, r.beams));
    r.loss = ad::scale(r.rate, -1.0);

    if (reparam::is_straight_through(p.config.head.mode)) {
        r.hard_rate = tape.value(r.rate).item();
    } else {
        const auto V = phy::project_beamforming(tape.value(r.vtilde), r.hard, s.bs_power_w);
        r.hard_rate = phy::sum_rate(s, r.hard, V);
    }
    return r;
}

/// Convenience wrapper: fresh tape, constant parameters.
struct Decision {
    phy::AssociationMatrix hard;
    ad::Tensor soft;
    phy::BeamformingTensor beams;  // projected under hard A
    double rate = 0.0;
};

inline Decision decide(const Scenario& s, const GnnParams& p, Rng* noise = nullptr) {
    ad::Tape tape;
    const GnnVars v = bind(tape, p, false);
    const ForwardResult r = forward(tape, s, p, v, noise);
    Decision d;
    d.hard = r.hard;
    d.soft = tape.value(r.soft);
    d.beams = phy::project_beamforming(tape.value(r.vtilde), r.hard, s.bs_power_w);
    d.rate = r.hard_rate;
    return d;
}

}  // namespace gnnassoc::gnn
