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

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnnassoc/ad/adam.hpp"
#include "gnnassoc/gnn.hpp"
#include "gnnassoc/rng.hpp"
#include "gnnassoc/scenario.hpp"

namespace gnnassoc::train {

struct TrainConfig {
    std::size_t epochs = 200;
    std::size_t batches_per_epoch = 40;
    std::size_t batch_size = 4;
    double lr_min = 1e-5;
    double lr_max = 1e-3;
    std::size_t restart_period = 50;  // T0
    std::size_t restart_multiplier = 2;
    /// Validation scenarios scored after every epoch for the run log and the
    /// best checkpoint. Drawn from a stream disjoint from the test set.
    std::size_t log_test_samples = 50;
    /// Held-out scenarios for the final evaluation.
    std::size_t test_samples = 200;
    /// Rescales the batch gradient to this global L2 norm when exceeded; 0 disables.
    double grad_clip_norm = 0.0;
    ad::AdamConfig adam;

    void validate() const {
        auto fail = [](const std::string& f, const std::string& why) {
            throw std::invalid_argument("train." + f + ": " + why);
        };
        if (epochs < 1) fail("epochs", "must be >= 1");
        if (batches_per_epoch < 1) fail("batches_per_epoch", "must be >= 1");
        if (batch_size < 1) fail("batch_size", "must be >= 1");
        if (!(lr_min >= 0.0)) fail("lr_min", "must be >= 0");
        if (!(lr_max >= lr_min)) fail("lr_max", "must be >= lr_min");
        if (restart_period < 1) fail("restart_period", "must be >= 1");
        if (restart_multiplier < 1) fail("restart_multiplier", "must be >= 1");
        if (test_samples < 1) fail("test_samples", "must be >= 1");
        if (!(grad_clip_norm >= 0.0)) fail("grad_clip_norm", "must be >= 0");
    }
};

struct PeriodPosition {
    std::size_t offset;  // epochs since the last restart
    std::size_t length;  // length of the current period
};

inline PeriodPosition period_position(std::size_t epoch, const TrainConfig& cfg) {
    std::size_t t = epoch, T = cfg.restart_period;
    while (t >= T) {
        t -= T;
        T *= cfg.restart_multiplier;
    }
    return {t, T};
}

/// Cosine decay from lr_max to lr_min within each period; periods grow by the
/// multiplier and the rate jumps back to lr_max at each restart.
inline double lr_schedule(std::size_t epoch, const TrainConfig& cfg) {
    const auto [t, T] = period_position(epoch, cfg);
    if (T == 1) return cfg.lr_max;
    const double c = 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(t) / static_cast<double>(T - 1)));
    return cfg.lr_min + (cfg.lr_max - cfg.lr_min) * c;
}

inline bool is_period_end(std::size_t epoch, const TrainConfig& cfg) {
    const auto [t, T] = period_position(epoch, cfg);
    return t + 1 == T;
}

struct RunLogRow {
    std::size_t epoch = 0;
    double loss = 0.0;
    double test_rate = 0.0;
    double lr = 0.0;
    double seconds = 0.0;
};

struct RunLog {
    std::vector<RunLogRow> rows;

    static constexpr const char* kHeader = "epoch,loss,test_rate,lr,seconds";

    void write_csv(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << kHeader << '\n' << std::setprecision(17);
        for (const auto& r : rows) out << r.epoch << ',' << r.loss << ',' << r.test_rate << ',' << r.lr << ',' << r.seconds << '\n';
    }

    static RunLog read_csv(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read " + path.string());
        std::string line;
        std::getline(in, line);
        if (line != kHeader) throw std::runtime_error(path.string() + ": unexpected header '" + line + "'");
        RunLog log;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            RunLogRow r;
            char c1, c2, c3, c4;
            ss >> r.epoch >> c1 >> r.loss >> c2 >> r.test_rate >> c3 >> r.lr >> c4 >> r.seconds;
            if (!ss) throw std::runtime_error(path.string() + ": malformed row '" + line + "'");
            log.rows.push_back(r);
        }
        return log;
    }

    /// Row-by-row equality of every column except wall time.
    bool same_trajectory(const RunLog& other) const {
        if (rows.size() != other.rows.size()) return false;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto &a = rows[i], &b = other.rows[i];
            if (a.epoch != b.epoch || a.loss != b.loss || a.test_rate != b.test_rate || a.lr != b.lr) return false;
        }
        return true;
    }
};

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One optimizer step on a mini-batch: loss = -mean_b R_b, gradients averaged
/// over the batch. Returns the batch loss. `label` prefixes diagnostics.
inline double train_batch(gnn::GnnParams& params, ad::AdamState& adam, const std::vector<Scenario>& batch, Rng& noise,
                          double lr, const ad::AdamConfig& adam_cfg, const std::string& label = "batch",
                          double grad_clip_norm = 0.0) {
    if (batch.empty()) throw std::invalid_argument("train_batch: empty batch");
    ad::Tape tape;
    const gnn::GnnVars v = gnn::bind(tape, params, true);
    const bool needs_noise = reparam::uses_gumbel(params.config.head.mode);
    ad::Var total{};
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto r = gnn::forward(tape, batch[i], params, v, needs_noise ? &noise : nullptr);
        total = i == 0 ? r.loss : ad::add(total, r.loss);
    }
    ad::Var loss = ad::scale(total, 1.0 / static_cast<double>(batch.size()));
    const double value = tape.value(loss).item();
    if (!std::isfinite(value)) throw TrainingDiverged(label + ": non-finite loss " + std::to_string(value));
    tape.backward(loss);

    auto named = params.named_tensors();
    std::vector<ad::Tensor*> ptrs;
    std::vector<ad::Tensor> grads;
    ptrs.reserve(named.size());
    grads.reserve(named.size());
    for (std::size_t i = 0; i < named.size(); ++i) {
        ptrs.push_back(named[i].second);
        grads.push_back(tape.grad(v.leaves[i]));
        if (!grads.back().all_finite()) throw TrainingDiverged(label + ": non-finite gradient in " + named[i].first);
    }
    if (grad_clip_norm > 0.0) {
        double sq = 0.0;
        for (const auto& g : grads)
            for (std::size_t j = 0; j < g.size(); ++j) sq += g[j] * g[j];
        const double norm = std::sqrt(sq);
        if (norm > grad_clip_norm) {
            const double f = grad_clip_norm / norm;
            for (auto& g : grads)
                for (std::size_t j = 0; j < g.size(); ++j) g[j] *= f;
        }
    }
    ad::adam_step(ptrs, grads, adam, lr, adam_cfg);
    return value;
}

struct EvalSummary {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t n = 0;
};

inline EvalSummary summarize(const std::vector<double>& x) {
    if (x.empty()) throw std::invalid_argument("summarize: no samples");
    EvalSummary s;
    s.n = x.size();
    for (double v : x) s.mean += v;
    s.mean /= static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double v : x) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
    return s;
}

/// Hard-decision sum-rate per test scenario. Stochastic evaluation draws
/// Gumbel noise from the eval stream of `root_seed`, indexed by sample.
inline std::vector<double> evaluate_rates(const gnn::GnnParams& params, const std::vector<Scenario>& test,
                                          std::uint64_t root_seed = 0) {
    if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
    const bool stochastic = params.config.head.eval_noise == reparam::EvalNoise::stochastic &&
                            reparam::uses_gumbel(params.config.head.mode);
    std::vector<double> rates;
    rates.reserve(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        Rng noise(derive_seed(root_seed, Stream::eval_gumbel, i));
        rates.push_back(gnn::decide(test[i], params, stochastic ? &noise : nullptr).rate);
    }
    return rates;
}

inline double evaluate(const gnn::GnnParams& params, const std::vector<Scenario>& test, std::uint64_t root_seed = 0) {
    return summarize(evaluate_rates(params, test, root_seed)).mean;
}

/// The first n scenarios of a seed stream.
inline std::vector<Scenario> scenario_set(const ScenarioConfig& cfg, std::uint64_t root_seed, std::size_t n,
                                          Stream stream = Stream::test_scenarios) {
    std::vector<Scenario> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(generate_scenario(cfg, derive_seed(root_seed, stream, i)));
    return out;
}

inline std::vector<Scenario> test_set(const ScenarioConfig& cfg, std::uint64_t root_seed, std::size_t n) {
    return scenario_set(cfg, root_seed, n, Stream::test_scenarios);
}

/// Fresh-sample training loop.
class Trainer {
public:
    /// Called with a tag ("restart-<epoch>", "best") whenever a checkpoint is due.
    using CheckpointHook = std::function<void(const std::string& tag, std::size_t epoch)>;
    /// Called after each epoch's row has been appended.
    using EpochHook = std::function<void(const RunLogRow&)>;

    Trainer(ScenarioConfig scenario, gnn::GnnParams params, TrainConfig cfg, std::uint64_t root_seed)
        : scenario_(std::move(scenario)), params_(std::move(params)), cfg_(cfg), root_seed_(root_seed) {
        scenario_.validate();
        cfg_.validate();
        if (cfg_.log_test_samples > 0) log_test_ = scenario_set(scenario_, root_seed_, cfg_.log_test_samples, Stream::validation);
    }

    const gnn::GnnParams& params() const { return params_; }
    gnn::GnnParams& params() { return params_; }
    const ad::AdamState& adam() const { return adam_; }
    const RunLog& log() const { return log_; }
    const TrainConfig& config() const { return cfg_; }
    double best_test_rate() const { return best_rate_; }

    void on_checkpoint(CheckpointHook h) { checkpoint_hook_ = std::move(h); }
    void on_epoch(EpochHook h) { epoch_hook_ = std::move(h); }

    void run() {
        while (epoch_ < cfg_.epochs) step_epoch();
    }

    const RunLogRow& step_epoch() {
        const auto start = std::chrono::steady_clock::now();
        const double lr = lr_schedule(epoch_, cfg_);
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < cfg_.batches_per_epoch; ++b) {
            const std::uint64_t batch_index = epoch_ * cfg_.batches_per_epoch + b;
            std::vector<Scenario> batch;
            batch.reserve(cfg_.batch_size);
            for (std::size_t i = 0; i < cfg_.batch_size; ++i) {
                batch.push_back(generate_scenario(
                    scenario_, derive_seed(root_seed_, Stream::train_scenarios, batch_index * cfg_.batch_size + i)));
            }
            Rng noise(derive_seed(root_seed_, Stream::train_gumbel, batch_index));
            const std::string label = "epoch " + std::to_string(epoch_) + " batch " + std::to_string(b) +
                                      " (root seed " + std::to_string(root_seed_) + ", scenario stream index " +
                                      std::to_string(batch_index * cfg_.batch_size) + ")";
            loss_sum += train_batch(params_, adam_, batch, noise, lr, cfg_.adam, label, cfg_.grad_clip_norm);
        }
        RunLogRow row;
        row.epoch = epoch_;
        row.loss = loss_sum / static_cast<double>(cfg_.batches_per_epoch);
        row.lr = lr;
        row.test_rate = log_test_.empty() ? std::numeric_limits<double>::quiet_NaN() : evaluate(params_, log_test_, root_seed_);
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        log_.rows.push_back(row);

        if (!log_test_.empty() && row.test_rate > best_rate_) {
            best_rate_ = row.test_rate;
            if (checkpoint_hook_) checkpoint_hook_("best", epoch_);
        }
        if (checkpoint_hook_ && is_period_end(epoch_, cfg_)) checkpoint_hook_("restart-" + std::to_string(epoch_), epoch_);
        if (epoch_hook_) epoch_hook_(row);
        ++epoch_;
        return log_.rows.back();
    }

private:
    ScenarioConfig scenario_;
    gnn::GnnParams params_;
    TrainConfig cfg_;
    std::uint64_t root_seed_;
    ad::AdamState adam_;
    RunLog log_;
    std::vector<Scenario> log_test_;
    std::size_t epoch_ = 0;
    double best_rate_ = -std::numeric_limits<double>::infinity();
    CheckpointHook checkpoint_hook_;
    EpochHook epoch_hook_;
};

}  // namespace gnnassoc::train
