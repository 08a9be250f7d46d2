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
#include <deque>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gnnassoc/ad/tensor.hpp"

namespace gnnassoc::ad {

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;
};

/// Define-by-run reverse-mode tape. Nodes are appended in evaluation order,
/// so every input id is smaller than the id of its consumer; backward walks
/// the records once, newest first.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    struct Node {
        const char* op = "";
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool has_grad = false;
        BackwardFn backward;
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) = delete;
    Tape& operator=(Tape&&) = delete;

    Var leaf(Tensor value, bool requires_grad = true) {
        return push("leaf", std::move(value), requires_grad, nullptr);
    }

    Var constant(Tensor value) { return push("const", std::move(value), false, nullptr); }

    Var push(const char* op, Tensor value, bool requires_grad, BackwardFn backward) {
        Node node;
        node.op = op;
        node.value = std::move(value);
        node.requires_grad = requires_grad;
        if (requires_grad) node.backward = std::move(backward);
        nodes_.push_back(std::move(node));
        return Var{this, nodes_.size() - 1};
    }

    const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
    const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Gradient slot of a node, allocated as zeros on first touch.
    Tensor& grad_slot(std::size_t id) { return ensure_grad(nodes_[id]); }

    const Tensor& grad_of(std::size_t id) const { return nodes_[id].grad; }
    bool has_grad(std::size_t id) const { return nodes_[id].has_grad; }

    /// d(loss)/d(v) after backward(); zeros when v did not reach the loss.
    const Tensor& grad(Var v) { return grad_slot(v.id); }

    void backward(Var loss) {
        if (loss.tape != this) throw std::invalid_argument("backward: loss belongs to another tape");
        if (value(loss).size() != 1) {
            throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                        shape_string(value(loss).shape()));
        }
        for (auto& n : nodes_) {
            n.has_grad = false;
            n.grad = Tensor();
        }
        grad_slot(loss.id)[0] = 1.0;
        for (std::size_t i = loss.id + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.requires_grad || !n.has_grad || !n.backward) continue;
            n.backward(*this, i);
        }
    }

private:
    static Tensor& ensure_grad(Node& n) {
        if (!n.has_grad) {
            n.grad = Tensor(n.value.shape(), 0.0);
            n.has_grad = true;
        }
        return n.grad;
    }

    std::deque<Node> nodes_;  // stable references across push
};

}  // namespace gnnassoc::ad
