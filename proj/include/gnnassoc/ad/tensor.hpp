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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gnnassoc::ad {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

/// Dense row-major tensor of doubles.
///
/// Most operations treat a tensor as a matrix (rows x cols). A rank-1 tensor
/// of length n is viewed as a 1 x n row; higher ranks fold every leading dim
/// into rows, so an M x K x F edge tensor reads as an (M*K) x F matrix.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape, double fill = 0.0)
        : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

    Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != shape_size(shape_)) {
            throw std::invalid_argument("Tensor: data length " + std::to_string(data_.size()) +
                                        " does not match shape " + shape_string(shape_));
        }
    }

    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
        return Tensor(Shape{rows, cols}, fill);
    }

    static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
        return Tensor(Shape{rows, cols}, std::vector<double>(values));
    }

    static Tensor scalar(double v) { return Tensor(Shape{1, 1}, v); }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::size_t cols() const noexcept { return shape_.empty() ? 1 : shape_.back(); }
    std::size_t rows() const noexcept {
        const std::size_t c = cols();
        return c == 0 ? 0 : data_.size() / c;
    }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    double& at(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }

    double item() const {
        if (data_.size() != 1) {
            throw std::invalid_argument("Tensor::item on non-scalar shape " + shape_string(shape_));
        }
        return data_[0];
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::vector<double>& storage() noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    Tensor reshaped(Shape shape) const {
        if (shape_size(shape) != data_.size()) {
            throw std::invalid_argument("Tensor::reshaped: " + shape_string(shape_) + " -> " +
                                        shape_string(shape));
        }
        return Tensor(std::move(shape), data_);
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
    }

    bool operator==(const Tensor&) const = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

namespace kernels {

// out[r x n] (+)= a[r x k] * b[k x n]
inline void gemm_nn(const double* a, const double* b, double* out, std::size_t r, std::size_t k, std::size_t n,
                    bool accumulate) {
    if (!accumulate) std::fill(out, out + r * n, 0.0);
    for (std::size_t i = 0; i < r; ++i) {
        double* orow = out + i * n;
        const double* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
}

// out[r x n] (+)= a[r x k] * b[n x k]^T
inline void gemm_nt(const double* a, const double* b, double* out, std::size_t r, std::size_t k, std::size_t n,
                    bool accumulate) {
    for (std::size_t i = 0; i < r; ++i) {
        const double* arow = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            if (accumulate) {
                out[i * n + j] += acc;
            } else {
                out[i * n + j] = acc;
            }
        }
    }
}

// out[k x n] (+)= a[r x k]^T * b[r x n]
inline void gemm_tn(const double* a, const double* b, double* out, std::size_t r, std::size_t k, std::size_t n,
                    bool accumulate) {
    if (!accumulate) std::fill(out, out + k * n, 0.0);
    for (std::size_t i = 0; i < r; ++i) {
        const double* arow = a + i * k;
        const double* brow = b + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            double* orow = out + p * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
}

}  // namespace kernels

}  // namespace gnnassoc::ad
