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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "gnnassoc/ad/checkpoint.hpp"
#include "gnnassoc/gnn.hpp"
#include "gnnassoc/scenario.hpp"
#include "gnnassoc/train.hpp"
#include "json.hpp"

namespace gnnassoc::config {

using nlohmann::json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

/// Reads fields of one JSON object and remembers which keys were consumed so
/// leftovers can be reported as unknown.
class FieldReader {
public:
    FieldReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    template <class T>
    void get(const std::string& key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(field(key) + ": " + type_hint<T>() + " (" + e.what() + ")");
        }
    }

    template <class T>
    void get_optional(const std::string& key, std::optional<T>& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        if (j_.at(key).is_null()) {
            out.reset();
            return;
        }
        T v{};
        get(key, v);
        out = v;
    }

    /// A nested object for `key`, or an empty object when absent.
    const json& child(const std::string& key) {
        seen_.insert(key);
        static const json empty = json::object();
        return j_.contains(key) ? j_.at(key) : empty;
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(field(it.key()) + ": unknown field");
    }

private:
    std::string where() const { return path_.empty() ? "<root>" : path_; }

    template <class T>
    static std::string type_hint() {
        if constexpr (std::is_same_v<T, bool>) return "expected a boolean";
        else if constexpr (std::is_unsigned_v<T>) return "expected a non-negative integer";
        else if constexpr (std::is_arithmetic_v<T>) return "expected a number";
        else if constexpr (std::is_same_v<T, std::string>) return "expected a string";
        else return "wrong type";
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class Parse>
auto parse_enum(const std::string& field, const std::string& value, Parse parse) {
    try {
        return parse(value);
    } catch (const std::exception& e) {
        throw ConfigError(field + ": " + e.what());
    }
}

/// Rethrows a validate() failure as a ConfigError, keeping its field-qualified message.
template <class T>
void validated(const T& t) {
    try {
        t.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace detail

// ---- scenario ---------------------------------------------------------------

inline json to_json(const ScenarioConfig& c) {
    json j{{"num_bs", c.num_bs},
           {"num_ue", c.num_ue},
           {"num_antennas", c.num_antennas},
           {"region_side_m", c.region_side_m},
           {"carrier_hz", c.carrier_hz},
           {"bandwidth_hz", c.bandwidth_hz},
           {"noise_psd_dbm_per_hz", c.noise_psd_dbm_per_hz},
           {"tx_power_dbm", c.tx_power_dbm},
           {"num_paths", c.num_paths},
           {"pathloss_exponent", c.pathloss_exponent},
           {"reference_distance_m", c.reference_distance_m},
           {"antenna_spacing_wavelengths", c.antenna_spacing_wavelengths}};
    j["reference_loss_db"] = c.reference_loss_db ? json(*c.reference_loss_db) : json(nullptr);
    return j;
}

inline ScenarioConfig scenario_from_json(const json& j, const std::string& path = "scenario") {
    ScenarioConfig c;
    detail::FieldReader r(j, path);
    r.get("num_bs", c.num_bs);
    r.get("num_ue", c.num_ue);
    r.get("num_antennas", c.num_antennas);
    r.get("region_side_m", c.region_side_m);
    r.get("carrier_hz", c.carrier_hz);
    r.get("bandwidth_hz", c.bandwidth_hz);
    r.get("noise_psd_dbm_per_hz", c.noise_psd_dbm_per_hz);
    if (j.contains("tx_power_dbm") && j.at("tx_power_dbm").is_number()) {
        double p = 0.0;
        r.get("tx_power_dbm", p);
        c.tx_power_dbm = {p};
    } else {
        r.get("tx_power_dbm", c.tx_power_dbm);
    }
    r.get("num_paths", c.num_paths);
    r.get("pathloss_exponent", c.pathloss_exponent);
    r.get("reference_distance_m", c.reference_distance_m);
    r.get_optional("reference_loss_db", c.reference_loss_db);
    r.get("antenna_spacing_wavelengths", c.antenna_spacing_wavelengths);
    r.finish();
    detail::validated(c);
    return c;
}

// ---- gnn --------------------------------------------------------------------

inline json to_json(const gnn::GnnConfig& c) {
    return json{{"num_layers", c.num_layers},
                {"d_bs", c.d_bs},
                {"d_ue", c.d_ue},
                {"d_edge", c.d_edge},
                {"hidden_width", c.hidden_width},
                {"hidden_layers", c.hidden_layers},
                {"aggregation", gnn::to_string(c.aggregation)},
                {"bs_index_features", c.bs_index_features},
                {"head",
                 {{"mode", reparam::to_string(c.head.mode)},
                  {"temperature", c.head.temperature},
                  {"eval_noise", c.head.eval_noise == reparam::EvalNoise::stochastic ? "stochastic" : "deterministic"}}}};
}

inline reparam::EvalNoise eval_noise_from_string(const std::string& s) {
    if (s == "deterministic") return reparam::EvalNoise::deterministic;
    if (s == "stochastic") return reparam::EvalNoise::stochastic;
    throw std::invalid_argument("unknown eval noise '" + s + "' (expected deterministic|stochastic)");
}

inline gnn::GnnConfig gnn_from_json(const json& j, const std::string& path = "gnn") {
    gnn::GnnConfig c;
    detail::FieldReader r(j, path);
    r.get("num_layers", c.num_layers);
    r.get("d_bs", c.d_bs);
    r.get("d_ue", c.d_ue);
    r.get("d_edge", c.d_edge);
    r.get("hidden_width", c.hidden_width);
    r.get("hidden_layers", c.hidden_layers);
    std::string agg = gnn::to_string(c.aggregation);
    r.get("aggregation", agg);
    c.aggregation = detail::parse_enum(r.field("aggregation"), agg, gnn::aggregation_from_string);
    r.get("bs_index_features", c.bs_index_features);

    const std::string head_path = r.field("head");
    detail::FieldReader h(r.child("head"), head_path);
    std::string mode = reparam::to_string(c.head.mode);
    h.get("mode", mode);
    c.head.mode = detail::parse_enum(h.field("mode"), mode, reparam::head_mode_from_string);
    h.get("temperature", c.head.temperature);
    std::string noise = "deterministic";
    h.get("eval_noise", noise);
    c.head.eval_noise = detail::parse_enum(h.field("eval_noise"), noise, eval_noise_from_string);
    h.finish();
    r.finish();
    detail::validated(c);
    return c;
}

// ---- train ------------------------------------------------------------------

inline json to_json(const train::TrainConfig& c) {
    return json{{"epochs", c.epochs},
                {"batches_per_epoch", c.batches_per_epoch},
                {"batch_size", c.batch_size},
                {"lr_min", c.lr_min},
                {"lr_max", c.lr_max},
                {"restart_period", c.restart_period},
                {"restart_multiplier", c.restart_multiplier},
                {"log_test_samples", c.log_test_samples},
                {"test_samples", c.test_samples},
                {"grad_clip_norm", c.grad_clip_norm},
                {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}}};
}

inline train::TrainConfig train_from_json(const json& j, const std::string& path = "train") {
    train::TrainConfig c;
    detail::FieldReader r(j, path);
    r.get("epochs", c.epochs);
    r.get("batches_per_epoch", c.batches_per_epoch);
    r.get("batch_size", c.batch_size);
    r.get("lr_min", c.lr_min);
    r.get("lr_max", c.lr_max);
    r.get("restart_period", c.restart_period);
    r.get("restart_multiplier", c.restart_multiplier);
    r.get("log_test_samples", c.log_test_samples);
    r.get("test_samples", c.test_samples);
    r.get("grad_clip_norm", c.grad_clip_norm);
    detail::FieldReader a(r.child("adam"), r.field("adam"));
    a.get("beta1", c.adam.beta1);
    a.get("beta2", c.adam.beta2);
    a.get("eps", c.adam.eps);
    a.finish();
    r.finish();
    detail::validated(c);
    return c;
}

// ---- run --------------------------------------------------------------------

struct RunConfig {
    ScenarioConfig scenario;
    gnn::GnnConfig gnn;
    train::TrainConfig train;
    std::uint64_t seed = 1;
    std::string output_dir = "runs/default";
    /// Scenarios used to estimate the channel feature scale.
    std::size_t calibration_samples = 256;
};

inline json to_json(const RunConfig& c) {
    return json{{"seed", c.seed},
                {"output_dir", c.output_dir},
                {"calibration_samples", c.calibration_samples},
                {"scenario", to_json(c.scenario)},
                {"gnn", to_json(c.gnn)},
                {"train", to_json(c.train)}};
}

inline RunConfig run_from_json(const json& j) {
    RunConfig c;
    detail::FieldReader r(j, "");
    r.get("seed", c.seed);
    r.get("output_dir", c.output_dir);
    r.get("calibration_samples", c.calibration_samples);
    c.scenario = scenario_from_json(r.child("scenario"));
    c.gnn = gnn_from_json(r.child("gnn"));
    c.train = train_from_json(r.child("train"));
    r.finish();
    if (c.calibration_samples < 1) throw ConfigError("calibration_samples: must be >= 1");
    return c;
}

/// JSON with // and /* */ comments allowed.
inline json parse_commented_json(const std::string& text, const std::string& source) {
    try {
        return json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(source + ": " + e.what());
    }
}

inline RunConfig parse_run_config(const std::string& text, const std::string& source = "<string>") {
    return run_from_json(parse_commented_json(text, source));
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_run_config(ss.str(), path.string());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

// ---- model checkpoints ------------------------------------------------------

struct Model {
    gnn::GnnParams params;
    ScenarioConfig scenario;  // training scenario
    ad::AdamState adam;
    std::uint64_t seed = 0;
    std::size_t epoch = 0;
};

inline ad::Checkpoint to_checkpoint(const gnn::GnnParams& p, const ScenarioConfig& scenario, const ad::AdamState& adam,
                                    std::uint64_t seed, std::size_t epoch) {
    ad::Checkpoint c;
    for (const auto& [name, t] : p.named_tensors()) c.tensors.emplace_back(name, *t);
    c.adam = adam;
    c.seed = seed;
    c.metadata = json{{"gnn", to_json(p.config)},
                      {"scenario", to_json(scenario)},
                      {"num_bs", p.num_bs},
                      {"num_antennas", p.num_antennas},
                      {"epoch", epoch},
                      {"scaling",
                       {{"power_ref_dbm", p.scaling.power_ref_dbm},
                        {"noise_ref_dbm", p.scaling.noise_ref_dbm},
                        {"channel_scale", p.scaling.channel_scale}}}};
    return c;
}

inline Model from_checkpoint(const ad::Checkpoint& c) {
    const json& m = c.metadata;
    Model out;
    out.scenario = scenario_from_json(m.at("scenario"), "metadata.scenario");
    const auto cfg = gnn_from_json(m.at("gnn"), "metadata.gnn");
    gnn::FeatureScaling s;
    s.power_ref_dbm = m.at("scaling").at("power_ref_dbm").get<double>();
    s.noise_ref_dbm = m.at("scaling").at("noise_ref_dbm").get<double>();
    s.channel_scale = m.at("scaling").at("channel_scale").get<double>();
    Rng unused(0);
    out.params = gnn::GnnParams::init(cfg, m.at("num_bs").get<std::size_t>(), m.at("num_antennas").get<std::size_t>(), s,
                                      unused);
    auto named = out.params.named_tensors();
    if (named.size() != c.tensors.size()) {
        throw std::runtime_error("checkpoint holds " + std::to_string(c.tensors.size()) + " tensors, model expects " +
                                 std::to_string(named.size()));
    }
    for (auto& [name, t] : named) {
        const ad::Tensor& src = c.tensor(name);
        if (src.shape() != t->shape()) throw std::runtime_error("checkpoint tensor '" + name + "' has the wrong shape");
        *t = src;
    }
    out.adam = c.adam;
    out.seed = c.seed;
    out.epoch = m.value("epoch", std::size_t{0});
    return out;
}

inline void save_model(const std::filesystem::path& path, const gnn::GnnParams& p, const ScenarioConfig& scenario,
                       const ad::AdamState& adam, std::uint64_t seed, std::size_t epoch) {
    ad::save_checkpoint(path, to_checkpoint(p, scenario, adam, seed, epoch));
}

inline Model load_model(const std::filesystem::path& path) { return from_checkpoint(ad::load_checkpoint(path)); }

}  // namespace gnnassoc::config
