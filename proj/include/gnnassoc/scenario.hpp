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

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnnassoc/ad/tensor.hpp"
#include "gnnassoc/rng.hpp"
#include "json.hpp"

namespace gnnassoc {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

struct ScenarioConfig {
    std::size_t num_bs = 2;        // M
    std::size_t num_ue = 8;        // K
    std::size_t num_antennas = 4;  // N, per BS, uniform linear array
    double region_side_m = 200.0;
    double carrier_hz = 28e9;
    double bandwidth_hz = 1e9;
    double noise_psd_dbm_per_hz = -174.0;
    /// One entry applies to every BS; otherwise exactly num_bs entries.
    std::vector<double> tx_power_dbm{30.0};
    std::size_t num_paths = 3;  // I
    double pathloss_exponent = 2.2;
    double reference_distance_m = 1.0;
    /// Loss at the reference distance; free-space at the carrier when unset.
    std::optional<double> reference_loss_db;
    double antenna_spacing_wavelengths = 0.5;

    void validate() const {
        auto fail = [](const std::string& field, const std::string& why) {
            throw std::invalid_argument("scenario." + field + ": " + why);
        };
        if (num_bs < 1) fail("num_bs", "must be >= 1");
        if (num_ue < 1) fail("num_ue", "must be >= 1");
        if (num_antennas < 1) fail("num_antennas", "must be >= 1");
        if (num_paths < 1) fail("num_paths", "must be >= 1");
        if (!(region_side_m > 0.0)) fail("region_side_m", "must be > 0");
        if (!(bandwidth_hz > 0.0)) fail("bandwidth_hz", "must be > 0");
        if (!(carrier_hz > 0.0)) fail("carrier_hz", "must be > 0");
        if (!(reference_distance_m > 0.0)) fail("reference_distance_m", "must be > 0");
        if (!(antenna_spacing_wavelengths > 0.0)) fail("antenna_spacing_wavelengths", "must be > 0");
        if (tx_power_dbm.size() != 1 && tx_power_dbm.size() != num_bs) {
            fail("tx_power_dbm", "needs 1 or num_bs entries");
        }
        for (double p : tx_power_dbm)
            if (!std::isfinite(p)) fail("tx_power_dbm", "must be finite");
    }

    double bs_power_dbm(std::size_t m) const { return tx_power_dbm.size() == 1 ? tx_power_dbm[0] : tx_power_dbm.at(m); }

    double wavelength_m() const { return kSpeedOfLight / carrier_hz; }

    double reference_loss() const {
        if (reference_loss_db) return *reference_loss_db;
        return 20.0 * std::log10(4.0 * std::numbers::pi * reference_distance_m / wavelength_m());
    }
};

/// One problem instance. Channels are indexed (m, k, n) with n fastest.
struct Scenario {
    std::size_t num_bs = 0, num_ue = 0, num_antennas = 0;
    std::vector<std::array<double, 2>> bs_pos;  // empty when rebuilt from features
    std::vector<std::array<double, 2>> ue_pos;
    std::vector<cplx> channels;        // M*K*N
    ad::Tensor features;               // M x K x 2N, [Re h ; Im h] per edge
    std::vector<double> bs_power_dbm;  // p
    std::vector<double> ue_noise_dbm;  // q
    std::vector<double> bs_power_w;
    std::vector<double> ue_noise_w;

    std::span<const cplx> channel(std::size_t m, std::size_t k) const {
        return std::span<const cplx>(channels).subspan((m * num_ue + k) * num_antennas, num_antennas);
    }
};

/// Received noise power in dBm: PSD + 10 log10(bandwidth).
inline double noise_power_dbm(const ScenarioConfig& cfg) {
    if (!(cfg.bandwidth_hz > 0.0)) throw std::invalid_argument("noise_power: bandwidth must be > 0");
    return cfg.noise_psd_dbm_per_hz + 10.0 * std::log10(cfg.bandwidth_hz);
}

inline double noise_power(const ScenarioConfig& cfg) { return dbm_to_watts(noise_power_dbm(cfg)); }

/// Element n is exp(j 2 pi (d / lambda) n sin(theta)).
inline std::vector<cplx> ula_response(double theta, std::size_t n_antennas, double spacing_wavelengths = 0.5) {
    std::vector<cplx> a(n_antennas);
    const double step = 2.0 * std::numbers::pi * spacing_wavelengths * std::sin(theta);
    for (std::size_t n = 0; n < n_antennas; ++n) a[n] = std::polar(1.0, step * static_cast<double>(n));
    return a;
}

struct ChannelPath {
    double gain;       // alpha_i, real amplitude
    double phase;      // phi_i
    double departure;  // theta_i^tx
};

/// h = (1/sqrt(I)) sum_i alpha_i e^{j phi_i} a_tx(theta_i).
inline std::vector<cplx> combine_paths(std::span<const ChannelPath> paths, std::size_t n_antennas,
                                       double spacing_wavelengths) {
    if (paths.empty()) throw std::invalid_argument("combine_paths: need at least one path");
    std::vector<cplx> h(n_antennas, cplx{0.0, 0.0});
    for (const auto& p : paths) {
        const cplx coef = std::polar(p.gain, p.phase);
        const auto a = ula_response(p.departure, n_antennas, spacing_wavelengths);
        for (std::size_t n = 0; n < n_antennas; ++n) h[n] += coef * a[n];
    }
    const double norm = 1.0 / std::sqrt(static_cast<double>(paths.size()));
    for (auto& x : h) x *= norm;
    return h;
}

/// Log-distance loss in dB; distances below the reference distance are clamped to it.
inline double pathloss_db(double distance_m, const ScenarioConfig& cfg) {
    const double d = std::max(distance_m, cfg.reference_distance_m);
    return cfg.reference_loss() + 10.0 * cfg.pathloss_exponent * std::log10(d / cfg.reference_distance_m);
}

/// Mean per-path power E[alpha^2] at a given distance (linear).
inline double mean_path_power(double distance_m, const ScenarioConfig& cfg) {
    return std::pow(10.0, -pathloss_db(distance_m, cfg) / 10.0);
}

inline std::vector<cplx> synthesize_channel(const std::array<double, 2>& tx, const std::array<double, 2>& rx,
                                            const ScenarioConfig& cfg, Rng& rng) {
    const double d = std::hypot(tx[0] - rx[0], tx[1] - rx[1]);
    const double amp = std::sqrt(mean_path_power(d, cfg));
    std::vector<ChannelPath> paths(cfg.num_paths);
    for (auto& p : paths) {
        // Rayleigh amplitude with unit mean power, via sqrt of an Exp(1) draw.
        p.gain = amp * std::sqrt(-std::log(rng.uniform_open()));
        p.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        p.departure = rng.uniform(-std::numbers::pi / 2.0, std::numbers::pi / 2.0);
    }
    return combine_paths(paths, cfg.num_antennas, cfg.antenna_spacing_wavelengths);
}

namespace detail {

inline void fill_derived(Scenario& s) {
    const std::size_t M = s.num_bs, K = s.num_ue, N = s.num_antennas;
    s.features = ad::Tensor(ad::Shape{M, K, 2 * N});
    for (std::size_t e = 0; e < M * K; ++e) {
        for (std::size_t n = 0; n < N; ++n) {
            s.features[e * 2 * N + n] = s.channels[e * N + n].real();
            s.features[e * 2 * N + N + n] = s.channels[e * N + n].imag();
        }
    }
    s.bs_power_w.resize(M);
    s.ue_noise_w.resize(K);
    for (std::size_t m = 0; m < M; ++m) s.bs_power_w[m] = dbm_to_watts(s.bs_power_dbm[m]);
    for (std::size_t k = 0; k < K; ++k) s.ue_noise_w[k] = dbm_to_watts(s.ue_noise_dbm[k]);
}

}  // namespace detail

inline Scenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    Scenario s;
    s.num_bs = cfg.num_bs;
    s.num_ue = cfg.num_ue;
    s.num_antennas = cfg.num_antennas;
    auto draw_pos = [&] { return std::array<double, 2>{rng.uniform(0.0, cfg.region_side_m), rng.uniform(0.0, cfg.region_side_m)}; };
    for (std::size_t m = 0; m < cfg.num_bs; ++m) s.bs_pos.push_back(draw_pos());
    for (std::size_t k = 0; k < cfg.num_ue; ++k) s.ue_pos.push_back(draw_pos());
    s.channels.reserve(cfg.num_bs * cfg.num_ue * cfg.num_antennas);
    for (std::size_t m = 0; m < cfg.num_bs; ++m) {
        for (std::size_t k = 0; k < cfg.num_ue; ++k) {
            const auto h = synthesize_channel(s.bs_pos[m], s.ue_pos[k], cfg, rng);
            s.channels.insert(s.channels.end(), h.begin(), h.end());
        }
    }
    for (std::size_t m = 0; m < cfg.num_bs; ++m) s.bs_power_dbm.push_back(cfg.bs_power_dbm(m));
    s.ue_noise_dbm.assign(cfg.num_ue, noise_power_dbm(cfg));
    detail::fill_derived(s);
    return s;
}

/// Rebuilds a scenario from its feature tensor and node features (no positions).
inline Scenario scenario_from_features(const ad::Tensor& features, std::vector<double> bs_power_dbm,
                                       std::vector<double> ue_noise_dbm) {
    if (features.rank() != 3 || features.shape()[2] % 2 != 0) {
        throw std::invalid_argument("scenario_from_features: expected M x K x 2N features, got " +
                                    ad::shape_string(features.shape()));
    }
    Scenario s;
    s.num_bs = features.shape()[0];
    s.num_ue = features.shape()[1];
    s.num_antennas = features.shape()[2] / 2;
    if (bs_power_dbm.size() != s.num_bs || ue_noise_dbm.size() != s.num_ue) {
        throw std::invalid_argument("scenario_from_features: node feature length mismatch");
    }
    const std::size_t N = s.num_antennas;
    s.channels.resize(s.num_bs * s.num_ue * N);
    for (std::size_t e = 0; e < s.num_bs * s.num_ue; ++e)
        for (std::size_t n = 0; n < N; ++n)
            s.channels[e * N + n] = cplx{features[e * 2 * N + n], features[e * 2 * N + N + n]};
    s.bs_power_dbm = std::move(bs_power_dbm);
    s.ue_noise_dbm = std::move(ue_noise_dbm);
    detail::fill_derived(s);
    return s;
}

/// Returns a copy with every BS transmitting at `dbm`.
inline Scenario with_bs_power(Scenario s, double dbm) {
    s.bs_power_dbm.assign(s.num_bs, dbm);
    detail::fill_derived(s);
    return s;
}

// ---------------------------------------------------------------------------
// Dataset cache: <stem>.bin holds per sample H, p, q as little-endian doubles;
// <stem>.json is the manifest.
// ---------------------------------------------------------------------------

inline void save_dataset(const std::filesystem::path& stem, std::span<const Scenario> samples, std::uint64_t seed) {
    if (samples.empty()) throw std::invalid_argument("save_dataset: empty dataset");
    const auto& s0 = samples.front();
    std::ofstream bin(stem.string() + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("save_dataset: cannot write " + stem.string() + ".bin");
    for (const auto& s : samples) {
        if (s.num_bs != s0.num_bs || s.num_ue != s0.num_ue || s.num_antennas != s0.num_antennas) {
            throw std::invalid_argument("save_dataset: samples must share (M, K, N)");
        }
        bin.write(reinterpret_cast<const char*>(s.features.data().data()),
                  static_cast<std::streamsize>(s.features.size() * sizeof(double)));
        bin.write(reinterpret_cast<const char*>(s.bs_power_dbm.data()),
                  static_cast<std::streamsize>(s.num_bs * sizeof(double)));
        bin.write(reinterpret_cast<const char*>(s.ue_noise_dbm.data()),
                  static_cast<std::streamsize>(s.num_ue * sizeof(double)));
    }
    nlohmann::json manifest{{"format", "gnnassoc-dataset"}, {"version", 1},   {"num_bs", s0.num_bs},
                            {"num_ue", s0.num_ue},         {"num_antennas", s0.num_antennas},
                            {"count", samples.size()},     {"seed", seed},
                            {"layout", "per sample: H[M][K][2N], p[M] dBm, q[K] dBm; float64"}};
    std::ofstream js(stem.string() + ".json");
    js << manifest.dump(2) << '\n';
}

struct Dataset {
    std::vector<Scenario> samples;
    std::uint64_t seed = 0;
};

inline Dataset load_dataset(const std::filesystem::path& stem) {
    std::ifstream js(stem.string() + ".json");
    if (!js) throw std::runtime_error("load_dataset: missing manifest " + stem.string() + ".json");
    const auto manifest = nlohmann::json::parse(js);
    if (manifest.value("format", "") != "gnnassoc-dataset") throw std::runtime_error("load_dataset: bad manifest");
    const std::size_t M = manifest.at("num_bs"), K = manifest.at("num_ue"), N = manifest.at("num_antennas");
    const std::size_t count = manifest.at("count");
    std::ifstream bin(stem.string() + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("load_dataset: missing " + stem.string() + ".bin");
    Dataset d;
    d.seed = manifest.at("seed");
    for (std::size_t i = 0; i < count; ++i) {
        ad::Tensor H(ad::Shape{M, K, 2 * N});
        std::vector<double> p(M), q(K);
        bin.read(reinterpret_cast<char*>(H.data().data()), static_cast<std::streamsize>(H.size() * sizeof(double)));
        bin.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(M * sizeof(double)));
        bin.read(reinterpret_cast<char*>(q.data()), static_cast<std::streamsize>(K * sizeof(double)));
        if (!bin) throw std::runtime_error("load_dataset: truncated payload");
        d.samples.push_back(scenario_from_features(H, std::move(p), std::move(q)));
    }
    return d;
}

}  // namespace gnnassoc
