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
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gnnassoc/ad/adam.hpp"
#include "gnnassoc/ad/tensor.hpp"
#include "json.hpp"

namespace gnnassoc::ad {

inline constexpr const char* kCheckpointFormat = "gnnassoc-checkpoint";
inline constexpr int kCheckpointVersion = 1;

/// Self-describing parameter container. Doubles are written in shortest
/// round-trip form, so save/load is bit-exact for finite values.
struct Checkpoint {
    std::vector<std::pair<std::string, Tensor>> tensors;
    AdamState adam;  // moments ordered like `tensors`, may be empty
    std::uint64_t seed = 0;
    nlohmann::json metadata = nlohmann::json::object();

    const Tensor& tensor(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return t;
        throw std::out_of_range("checkpoint has no tensor named '" + name + "'");
    }
};

namespace detail {

inline nlohmann::json tensor_to_json(const Tensor& t) {
    return nlohmann::json{{"shape", t.shape()}, {"data", t.storage()}};
}

inline Tensor tensor_from_json(const nlohmann::json& j) {
    return Tensor(j.at("shape").get<Shape>(), j.at("data").get<std::vector<double>>());
}

}  // namespace detail

inline nlohmann::json checkpoint_to_json(const Checkpoint& c) {
    nlohmann::json j;
    j["format"] = kCheckpointFormat;
    j["version"] = kCheckpointVersion;
    j["seed"] = c.seed;
    j["metadata"] = c.metadata;
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& [name, t] : c.tensors) {
        nlohmann::json e = detail::tensor_to_json(t);
        e["name"] = name;
        tensors.push_back(std::move(e));
    }
    j["tensors"] = std::move(tensors);
    nlohmann::json adam;
    adam["step"] = c.adam.step;
    adam["first_moment"] = nlohmann::json::array();
    adam["second_moment"] = nlohmann::json::array();
    for (const auto& m : c.adam.first_moment) adam["first_moment"].push_back(detail::tensor_to_json(m));
    for (const auto& v : c.adam.second_moment) adam["second_moment"].push_back(detail::tensor_to_json(v));
    j["adam"] = std::move(adam);
    return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != kCheckpointFormat) throw std::runtime_error("not a gnnassoc checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) {
        throw std::runtime_error("unsupported checkpoint version " + j.at("version").dump());
    }
    Checkpoint c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.metadata = j.at("metadata");
    for (const auto& e : j.at("tensors")) c.tensors.emplace_back(e.at("name").get<std::string>(), detail::tensor_from_json(e));
    const auto& adam = j.at("adam");
    c.adam.step = adam.at("step").get<std::uint64_t>();
    for (const auto& m : adam.at("first_moment")) c.adam.first_moment.push_back(detail::tensor_from_json(m));
    for (const auto& v : adam.at("second_moment")) c.adam.second_moment.push_back(detail::tensor_from_json(v));
    return c;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out << checkpoint_to_json(c).dump();
    if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    return checkpoint_from_json(nlohmann::json::parse(in));
}

}  // namespace gnnassoc::ad
