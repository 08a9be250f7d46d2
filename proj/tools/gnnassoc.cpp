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
#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gnnassoc/expcli.hpp"

using namespace gnnassoc;

namespace {

void print_table(const expcli::ResultTable& t) {
    std::cout << expcli::ResultTable::kHeader << '\n';
    for (const auto& r : t.rows) std::cout << r.axis << ',' << r.method << ',' << r.mean_rate << ',' << r.std << ',' << r.n << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GNN joint user association and beamforming experiments"};
    app.require_subcommand(1);

    std::string config_path, checkpoint, out, methods = "gnn,mrt_max_sinr,random_mrt", axis = "ue";
    std::optional<std::uint64_t> seed;
    std::vector<double> values;
    std::size_t samples = 200, channels = 20;
    bool quiet = false;

    auto* train = app.add_subcommand("train", "train a model from a run config");
    train->add_option("--config", config_path, "run config (JSON, comments allowed)")->required();
    train->add_option("--seed", seed, "override the root seed");
    train->add_option("--out", out, "override the output directory");
    train->add_flag("--quiet", quiet, "no per-epoch progress");

    auto add_eval_options = [&](CLI::App* c) {
        c->add_option("--checkpoint", checkpoint, "model checkpoint")->required()->check(CLI::ExistingFile);
        c->add_option("--config", config_path, "run config whose scenario replaces the checkpoint's");
        c->add_option("--seed", seed, "root seed for test scenarios (default: checkpoint seed)");
        c->add_option("--out", out, "directory for results.csv and manifest.json");
        c->add_option("--methods", methods, "comma list of gnn,mrt_max_sinr,random_mrt,oracle");
        c->add_option("--samples", samples, "test scenarios per point");
    };
    auto* evaluate = app.add_subcommand("evaluate", "held-out evaluation at the training scenario");
    add_eval_options(evaluate);
    auto* generalize = app.add_subcommand("generalize", "sweep UE count or transmit power without retraining");
    add_eval_options(generalize);
    generalize->add_option("--axis", axis, "ue or power")->check(CLI::IsMember({"ue", "power"}));
    generalize->add_option("--values", values, "axis values, e.g. --values 8 16 24")->required()->delimiter(',');

    auto* visualize = app.add_subcommand("visualize", "dump association factors to assoc.csv");
    visualize->add_option("--checkpoint", checkpoint, "model checkpoint")->required()->check(CLI::ExistingFile);
    visualize->add_option("--seed", seed, "root seed for test scenarios (default: checkpoint seed)");
    visualize->add_option("--out", out, "output directory")->required();
    visualize->add_option("--channels", channels, "number of channels");

    double M = 2, K = 8, L = 2, t_train = 1, t_infer = 1;
    auto* cost = app.add_subcommand("cost", "per-sample complexity units");
    cost->add_option("-M", M, "base stations");
    cost->add_option("-K", K, "user equipments");
    cost->add_option("-L", L, "update layers");
    cost->add_option("--t-train", t_train, "per-MLP cost in training");
    cost->add_option("--t-infer", t_infer, "per-MLP cost in inference");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            auto cfg = config::load_run_config(config_path);
            if (seed) cfg.seed = *seed;
            if (!out.empty()) cfg.output_dir = out;
            const auto r = expcli::cmd_train(cfg, quiet ? nullptr : &std::cout);
            std::cout << "run directory " << r.run_dir.string() << " (best validation rate " << r.best_validation_rate
                      << " at epoch " << r.best_epoch << ")\n";
            return 0;
        }
        if (*evaluate || *generalize) {
            expcli::GeneralizeRequest req;
            req.checkpoint = checkpoint;
            req.methods = expcli::split_list(methods);
            req.samples = samples;
            req.seed = seed;
            if (!config_path.empty()) req.scenario = config::load_run_config(config_path).scenario;
            if (!out.empty()) req.out = out;
            if (*evaluate) {
                print_table(expcli::cmd_evaluate(req));
            } else {
                req.axis = expcli::axis_from_string(axis);
                req.values = values;
                print_table(expcli::cmd_generalize(req));
            }
            return 0;
        }
        if (*visualize) {
            const auto rows = expcli::cmd_visualize(checkpoint, channels, seed, out);
            std::cout << "wrote " << rows.size() << " rows to " << out << "/assoc.csv\n";
            return 0;
        }
        if (*cost) {
            const auto c = expcli::cmd_cost(M, K, L, t_train, t_infer);
            std::cout << "M=" << M << " K=" << K << " L=" << L << '\n'
                      << "train units " << c.train << " (T=" << t_train << ")\n"
                      << "infer units " << c.infer << " (T=" << t_infer << ")\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
