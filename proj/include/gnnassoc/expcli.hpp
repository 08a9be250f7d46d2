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
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnnassoc/baselines.hpp"
#include "gnnassoc/config.hpp"
#include "gnnassoc/gnn.hpp"
#include "gnnassoc/phy.hpp"
#include "gnnassoc/train.hpp"
#include "json.hpp"

namespace gnnassoc::expcli {

namespace fs = std::filesystem;
using nlohmann::json;

inline void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

// ---- results ----------------------------------------------------------------

struct ResultRow {
    std::string axis;  // axis value, e.g. "8" for K = 8 or "30" for 30 dBm
    std::string method;
    double mean_rate = 0.0;
    double std = 0.0;
    std::size_t n = 0;
};

struct ResultTable {
    std::vector<ResultRow> rows;

    static constexpr const char* kHeader = "axis,method,mean_rate,std,n";

    const ResultRow& find(const std::string& axis, const std::string& method) const {
        for (const auto& r : rows)
            if (r.axis == axis && r.method == method) return r;
        throw std::out_of_range("no result for axis '" + axis + "' method '" + method + "'");
    }

    void write_csv(const fs::path& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << kHeader << '\n' << std::setprecision(17);
        for (const auto& r : rows) out << r.axis << ',' << r.method << ',' << r.mean_rate << ',' << r.std << ',' << r.n << '\n';
    }
};

inline std::string format_axis(double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

// ---- methods ----------------------------------------------------------------

inline const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> m{"gnn", "mrt_max_sinr", "random_mrt", "oracle"};
    return m;
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

inline void check_methods(const std::vector<std::string>& methods, bool have_model) {
    if (methods.empty()) throw std::invalid_argument("no methods requested");
    for (const auto& m : methods) {
        bool ok = false;
        for (const auto& k : known_methods()) ok = ok || m == k;
        if (!ok) throw std::invalid_argument("unknown method '" + m + "' (expected gnn|mrt_max_sinr|random_mrt|oracle)");
        if (m == "gnn" && !have_model) throw std::invalid_argument("method 'gnn' needs a checkpoint");
    }
}

/// Label written to the method column for the GNN, e.g. "gnn_stgs".
inline std::string gnn_label(const gnn::GnnParams& p) { return "gnn_" + reparam::to_string(p.config.head.mode); }

/// Per-scenario sum-rates of one method. Random choices come from the
/// baseline stream of `root_seed`, indexed by sample.
inline std::vector<double> method_rates(const std::string& method, const std::vector<Scenario>& test,
                                        const gnn::GnnParams* model, std::uint64_t root_seed) {
    if (method == "gnn") {
        if (!model) throw std::invalid_argument("method 'gnn' needs a checkpoint");
        return train::evaluate_rates(*model, test, root_seed);
    }
    std::vector<double> rates;
    rates.reserve(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        const Scenario& s = test[i];
        if (method == "mrt_max_sinr") {
            rates.push_back(baselines::mrt_max_sinr(s).sum_rate);
        } else if (method == "random_mrt") {
            Rng rng(derive_seed(root_seed, Stream::baseline, i));
            rates.push_back(baselines::random_association_mrt(s, rng).sum_rate);
        } else if (method == "oracle") {
            rates.push_back(phy::brute_force_best_association(s).sum_rate);
        } else {
            throw std::invalid_argument("unknown method '" + method + "'");
        }
    }
    return rates;
}

inline void append_results(ResultTable& table, const std::string& axis, const std::vector<std::string>& methods,
                           const std::vector<Scenario>& test, const gnn::GnnParams* model, std::uint64_t root_seed) {
    for (const auto& m : methods) {
        const auto s = train::summarize(method_rates(m, test, model, root_seed));
        table.rows.push_back({axis, m == "gnn" ? gnn_label(*model) : m, s.mean, s.stddev, s.n});
    }
}

// ---- train ------------------------------------------------------------------

struct TrainOutcome {
    fs::path run_dir;
    train::RunLog log;
    gnn::GnnParams params;  // last epoch
    ad::AdamState adam;
    double channel_scale = 0.0;
    double best_validation_rate = 0.0;
    std::size_t best_epoch = 0;
};

inline gnn::GnnParams initial_params(const config::RunConfig& cfg) {
    gnn::FeatureScaling scaling;
    scaling.channel_scale = gnn::calibrate_channel_scale(cfg.scenario, cfg.seed, cfg.calibration_samples);
    Rng rng(derive_seed(cfg.seed, Stream::init));
    return gnn::GnnParams::init(cfg.gnn, cfg.scenario.num_bs, cfg.scenario.num_antennas, scaling, rng);
}

/// Trains from `cfg` and writes into cfg.output_dir: manifest.json,
/// runlog.csv, restart-<epoch>.json, best.json, last.json and results.csv
/// (held-out evaluation of the last checkpoint next to the baselines).
inline TrainOutcome cmd_train(const config::RunConfig& cfg, std::ostream* progress = nullptr) {
    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    train::Trainer trainer(cfg.scenario, initial_params(cfg), cfg.train, cfg.seed);
    std::size_t best_epoch = 0;
    trainer.on_checkpoint([&](const std::string& tag, std::size_t epoch) {
        if (tag == "best") best_epoch = epoch;
        config::save_model(dir / (tag + ".json"), trainer.params(), cfg.scenario, trainer.adam(), cfg.seed, epoch);
    });
    trainer.on_epoch([&](const train::RunLogRow& r) {
        trainer.log().write_csv(dir / "runlog.csv");
        if (progress) {
            *progress << "epoch " << r.epoch << " loss " << r.loss << " validation_rate " << r.test_rate << " lr " << r.lr
                      << " (" << r.seconds << " s)\n"
                      << std::flush;
        }
    });
    trainer.run();
    config::save_model(dir / "last.json", trainer.params(), cfg.scenario, trainer.adam(), cfg.seed, cfg.train.epochs - 1);

    const auto test = train::test_set(cfg.scenario, cfg.seed, cfg.train.test_samples);
    ResultTable table;
    append_results(table, std::to_string(cfg.scenario.num_ue), {"gnn", "mrt_max_sinr", "random_mrt"}, test,
                   &trainer.params(), cfg.seed);
    table.write_csv(dir / "results.csv");

    TrainOutcome out{dir,
                     trainer.log(),
                     trainer.params(),
                     trainer.adam(),
                     trainer.params().scaling.channel_scale,
                     trainer.best_test_rate(),
                     best_epoch};

    json results = json::array();
    for (const auto& r : table.rows) results.push_back({{"method", r.method}, {"mean_rate", r.mean_rate}, {"n", r.n}});
    write_json(dir / "manifest.json",
               json{{"command", "train"},
                    {"config", config::to_json(cfg)},
                    {"seed", cfg.seed},
                    {"parameter_count", trainer.params().parameter_count()},
                    {"channel_scale", out.channel_scale},
                    {"best_epoch", best_epoch},
                    {"best_validation_rate", out.best_validation_rate},
                    {"test_results", results}});
    return out;
}

// ---- evaluate / generalize --------------------------------------------------

enum class Axis { ue, power };

inline Axis axis_from_string(const std::string& s) {
    if (s == "ue") return Axis::ue;
    if (s == "power") return Axis::power;
    throw std::invalid_argument("unknown axis '" + s + "' (expected ue|power)");
}

struct EvalRequest {
    fs::path checkpoint;
    std::vector<std::string> methods{"gnn", "mrt_max_sinr", "random_mrt"};
    std::size_t samples = 200;
    std::optional<std::uint64_t> seed;        // defaults to the checkpoint's seed
    std::optional<ScenarioConfig> scenario;   // defaults to the training scenario
    std::optional<fs::path> out;              // results.csv + manifest.json when set
};

struct GeneralizeRequest : EvalRequest {
    Axis axis = Axis::ue;
    std::vector<double> values;
};

namespace detail {

struct Prepared {
    config::Model model;
    ScenarioConfig scenario;
    std::uint64_t seed;
};

inline Prepared prepare(const EvalRequest& req) {
    check_methods(req.methods, true);
    if (req.samples < 1) throw std::invalid_argument("samples must be >= 1");
    Prepared p{config::load_model(req.checkpoint), {}, 0};
    p.scenario = req.scenario.value_or(p.model.scenario);
    if (p.scenario.num_bs != p.model.params.num_bs) {
        throw std::invalid_argument("scenario has M=" + std::to_string(p.scenario.num_bs) + " but the checkpoint was trained with M=" +
                                    std::to_string(p.model.params.num_bs));
    }
    if (p.scenario.num_antennas != p.model.params.num_antennas) {
        throw std::invalid_argument("scenario has N=" + std::to_string(p.scenario.num_antennas) +
                                    " but the checkpoint was trained with N=" + std::to_string(p.model.params.num_antennas));
    }
    p.seed = req.seed.value_or(p.model.seed);
    return p;
}

inline void finish(const EvalRequest& req, const ResultTable& table, json manifest, const Prepared& p) {
    if (!req.out) return;
    fs::create_directories(*req.out);
    table.write_csv(*req.out / "results.csv");
    manifest["checkpoint"] = fs::absolute(req.checkpoint).string();
    manifest["seed"] = p.seed;
    manifest["samples"] = req.samples;
    manifest["methods"] = req.methods;
    manifest["scenario"] = config::to_json(p.scenario);
    write_json(*req.out / "manifest.json", manifest);
}

}  // namespace detail

/// Held-out evaluation on the checkpoint's scenario; the axis column holds K.
inline ResultTable cmd_evaluate(const EvalRequest& req) {
    const auto p = detail::prepare(req);
    p.scenario.validate();
    ResultTable table;
    append_results(table, std::to_string(p.scenario.num_ue), req.methods,
                   train::test_set(p.scenario, p.seed, req.samples), &p.model.params, p.seed);
    detail::finish(req, table, json{{"command", "evaluate"}}, p);
    return table;
}

/// Sweeps K (axis ue) or the per-BS power in dBm (axis power) without retraining.
inline ResultTable cmd_generalize(const GeneralizeRequest& req) {
    if (req.values.empty()) throw std::invalid_argument("generalize: no axis values");
    const auto p = detail::prepare(req);
    ResultTable table;
    for (double v : req.values) {
        ScenarioConfig s = p.scenario;
        if (req.axis == Axis::ue) {
            if (!(v >= 1.0) || v != std::floor(v)) throw std::invalid_argument("UE count must be an integer >= 1, got " + format_axis(v));
            s.num_ue = static_cast<std::size_t>(v);
        } else {
            s.tx_power_dbm = {v};
        }
        s.validate();
        append_results(table, format_axis(v), req.methods, train::test_set(s, p.seed, req.samples), &p.model.params, p.seed);
    }
    detail::finish(req, table,
                   json{{"command", "generalize"}, {"axis", req.axis == Axis::ue ? "ue" : "power"}, {"values", req.values}}, p);
    return table;
}

// ---- visualize --------------------------------------------------------------

struct AssocRow {
    std::size_t channel, ue, bs;
    double soft, hard;
};

/// Association factors of the first `n_channels` test scenarios: the noise-free
/// soft head output and the hard decision used for the rate.
inline std::vector<AssocRow> cmd_visualize(const fs::path& checkpoint, std::size_t n_channels,
                                           std::optional<std::uint64_t> seed = std::nullopt,
                                           std::optional<fs::path> out = std::nullopt) {
    const auto model = config::load_model(checkpoint);
    const std::uint64_t root = seed.value_or(model.seed);
    const auto test = train::test_set(model.scenario, root, n_channels);
    std::vector<AssocRow> rows;
    for (std::size_t c = 0; c < test.size(); ++c) {
        const auto d = gnn::decide(test[c], model.params);
        for (std::size_t k = 0; k < test[c].num_ue; ++k)
            for (std::size_t m = 0; m < test[c].num_bs; ++m) rows.push_back({c, k, m, d.soft.at(k, m), d.hard(k, m)});
    }
    if (out) {
        fs::create_directories(*out);
        std::ofstream f(*out / "assoc.csv");
        if (!f) throw std::runtime_error("cannot write " + (*out / "assoc.csv").string());
        f << "channel,ue,bs,soft,hard\n" << std::setprecision(17);
        for (const auto& r : rows) f << r.channel << ',' << r.ue << ',' << r.bs << ',' << r.soft << ',' << r.hard << '\n';
        write_json(*out / "manifest.json", json{{"command", "visualize"},
                                                {"checkpoint", fs::absolute(checkpoint).string()},
                                                {"seed", root},
                                                {"channels", n_channels}});
    }
    return rows;
}

// ---- cost -------------------------------------------------------------------

/// Per-sample cost units: L(2MKT^2 + MKT) + (M + K + 3MK)T.
inline double gnn_cost(double M, double K, double L, double T) {
    return L * (2.0 * M * K * T * T + M * K * T) + (M + K + 3.0 * M * K) * T;
}

struct CostReport {
    double train = 0.0;
    double infer = 0.0;
};

inline CostReport cmd_cost(double M, double K, double L, double t_train, double t_infer) {
    for (double v : {M, K, L, t_train, t_infer})
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("cost: arguments must be finite and >= 0");
    return {gnn_cost(M, K, L, t_train), gnn_cost(M, K, L, t_infer)};
}

}  // namespace gnnassoc::expcli
