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
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gnnassoc/ad/tape.hpp"
#include "gnnassoc/ad/tensor.hpp"

namespace gnnassoc::ad {

namespace detail {

inline Tape& tape_of(Var a) {
    if (a.tape == nullptr) throw std::invalid_argument("Var is not bound to a tape");
    return *a.tape;
}

inline Tape& tape_of(Var a, Var b) {
    if (a.tape == nullptr || a.tape != b.tape) throw std::invalid_argument("Vars belong to different tapes");
    return *a.tape;
}

inline Shape matrix_shape(const Tensor& t) { return Shape{t.rows(), t.cols()}; }

// Second operand may broadcast along rows (1 x c), cols (r x 1), or both.
struct Broadcast {
    std::size_t rows, cols, b_rows, b_cols;
    std::size_t b_index(std::size_t i, std::size_t j) const {
        return (b_rows == 1 ? 0 : i) * b_cols + (b_cols == 1 ? 0 : j);
    }
};

inline Broadcast broadcast_of(const Tensor& a, const Tensor& b, const char* op) {
    Broadcast bc{a.rows(), a.cols(), b.rows(), b.cols()};
    if ((bc.b_rows != bc.rows && bc.b_rows != 1) || (bc.b_cols != bc.cols && bc.b_cols != 1)) {
        throw std::invalid_argument(std::string(op) + ": cannot broadcast " + shape_string(b.shape()) + " to " +
                                    shape_string(a.shape()));
    }
    return bc;
}

template <typename F, typename D>
Var unary(Var a, const char* op, F f, D dfdx) {
    Tape& t = tape_of(a);
    const Tensor& x = t.value(a);
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
    const std::size_t ai = a.id;
    return t.push(op, std::move(y), t.requires_grad(a), [ai, dfdx](Tape& tp, std::size_t self) {
        const Tensor& xv = tp.value(ai);
        const Tensor& yv = tp.value(self);
        const Tensor& g = tp.grad_of(self);
        Tensor& ga = tp.grad_slot(ai);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dfdx(xv[i], yv[i]);
    });
}

enum class BinaryKind { add, sub, mul, div };

inline Var binary(Var a, Var b, BinaryKind kind, const char* op) {
    Tape& t = tape_of(a, b);
    const Tensor& x = t.value(a);
    const Tensor& z = t.value(b);
    const Broadcast bc = broadcast_of(x, z, op);
    Tensor y(x.shape());
    for (std::size_t i = 0; i < bc.rows; ++i) {
        for (std::size_t j = 0; j < bc.cols; ++j) {
            const std::size_t k = i * bc.cols + j;
            const double zv = z[bc.b_index(i, j)];
            switch (kind) {
                case BinaryKind::add: y[k] = x[k] + zv; break;
                case BinaryKind::sub: y[k] = x[k] - zv; break;
                case BinaryKind::mul: y[k] = x[k] * zv; break;
                case BinaryKind::div:
                    if (zv == 0.0) throw std::domain_error("div: division by zero");
                    y[k] = x[k] / zv;
                    break;
            }
        }
    }
    const std::size_t ai = a.id, bi = b.id;
    const bool rg = t.requires_grad(a) || t.requires_grad(b);
    return t.push(op, std::move(y), rg, [ai, bi, bc, kind](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad_of(self);
        const Tensor& xv = tp.value(ai);
        const Tensor& zv = tp.value(bi);
        const bool ga_on = tp.requires_grad(ai), gb_on = tp.requires_grad(bi);
        Tensor* ga = ga_on ? &tp.grad_slot(ai) : nullptr;
        Tensor* gb = gb_on ? &tp.grad_slot(bi) : nullptr;
        for (std::size_t i = 0; i < bc.rows; ++i) {
            for (std::size_t j = 0; j < bc.cols; ++j) {
                const std::size_t k = i * bc.cols + j;
                const std::size_t kb = bc.b_index(i, j);
                const double gk = g[k];
                switch (kind) {
                    case BinaryKind::add:
                        if (ga) (*ga)[k] += gk;
                        if (gb) (*gb)[kb] += gk;
                        break;
                    case BinaryKind::sub:
                        if (ga) (*ga)[k] += gk;
                        if (gb) (*gb)[kb] -= gk;
                        break;
                    case BinaryKind::mul:
                        if (ga) (*ga)[k] += gk * zv[kb];
                        if (gb) (*gb)[kb] += gk * xv[k];
                        break;
                    case BinaryKind::div:
                        if (ga) (*ga)[k] += gk / zv[kb];
                        if (gb) (*gb)[kb] -= gk * xv[k] / (zv[kb] * zv[kb]);
                        break;
                }
            }
        }
    });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

/// a[r x k] * b[k x n]
inline Var matmul(Var a, Var b) {
    Tape& t = detail::tape_of(a, b);
    const Tensor& x = t.value(a);
    const Tensor& w = t.value(b);
    if (x.cols() != w.rows()) {
        throw std::invalid_argument("matmul: inner dims differ " + shape_string(x.shape()) + " * " +
                                    shape_string(w.shape()));
    }
    const std::size_t r = x.rows(), k = x.cols(), n = w.cols();
    Tensor y = Tensor::matrix(r, n);
    kernels::gemm_nn(x.data().data(), w.data().data(), y.data().data(), r, k, n, false);
    const std::size_t ai = a.id, bi = b.id;
    const bool rg = t.requires_grad(a) || t.requires_grad(b);
    return t.push("matmul", std::move(y), rg, [ai, bi, r, k, n](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad_of(self);
        if (tp.requires_grad(ai)) {
            Tensor& ga = tp.grad_slot(ai);
            kernels::gemm_nt(g.data().data(), tp.value(bi).data().data(), ga.data().data(), r, n, k, true);
        }
        if (tp.requires_grad(bi)) {
            Tensor& gb = tp.grad_slot(bi);
            kernels::gemm_tn(tp.value(ai).data().data(), g.data().data(), gb.data().data(), r, k, n, true);
        }
    });
}

/// a[r x k] * b[n x k]^T
inline Var matmul_nt(Var a, Var b) {
    Tape& t = detail::tape_of(a, b);
    const Tensor& x = t.value(a);
    const Tensor& w = t.value(b);
    if (x.cols() != w.cols()) {
        throw std::invalid_argument("matmul_nt: inner dims differ " + shape_string(x.shape()) + " * " +
                                    shape_string(w.shape()) + "^T");
    }
    const std::size_t r = x.rows(), k = x.cols(), n = w.rows();
    Tensor y = Tensor::matrix(r, n);
    kernels::gemm_nt(x.data().data(), w.data().data(), y.data().data(), r, k, n, false);
    const std::size_t ai = a.id, bi = b.id;
    const bool rg = t.requires_grad(a) || t.requires_grad(b);
    return t.push("matmul_nt", std::move(y), rg, [ai, bi, r, k, n](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad_of(self);
        if (tp.requires_grad(ai)) {
            Tensor& ga = tp.grad_slot(ai);
            kernels::gemm_nn(g.data().data(), tp.value(bi).data().data(), ga.data().data(), r, n, k, true);
        }
        if (tp.requires_grad(bi)) {
            Tensor& gb = tp.grad_slot(bi);
            kernels::gemm_tn(g.data().data(), tp.value(ai).data().data(), gb.data().data(), r, n, k, true);
        }
    });
}

inline Var transpose(Var a) {
    Tape& t = detail::tape_of(a);
    const Tensor& x = t.value(a);
    const std::size_t r = x.rows(), c = x.cols();
    Tensor y = Tensor::matrix(c, r);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) y[j * r + i] = x[i * c + j];
    const std::size_t ai = a.id;
    return t.push("transpose", std::move(y), t.requires_grad(a), [ai, r, c](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad_of(self);
        Tensor& ga = tp.grad_slot(ai);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[j * r + i];
    });
}

// ---------------------------------------------------------------------------
// Elementwise arithmetic (second operand broadcasts)
// ---------------------------------------------------------------------------

inline Var add(Var a, Var b) { return detail::binary(a, b, detail::BinaryKind::add, "add"); }
inline Var sub(Var a, Var b) { return detail::binary(a, b, detail::BinaryKind::sub, "sub"); }
inline Var mul(Var a, Var b) { return detail::binary(a, b, detail::BinaryKind::mul, "mul"); }
/// Throws std::domain_error when any denominator entry is exactly zero.
inline Var div(Var a, Var b) { return detail::binary(a, b, detail::BinaryKind::div, "div"); }

inline Var scale(Var a, double c) {
    return detail::unary(a, "scale", [c](double x) { return c * x; }, [c](double, double) { return c; });
}

inline Var add_scalar(Var a, double c) {
    return detail::unary(a, "add_scalar", [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

// ---------------------------------------------------------------------------
// Elementwise functions
// ---------------------------------------------------------------------------

inline Var relu(Var a) {
    return detail::unary(
        a, "relu", [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Var leaky_relu(Var a, double slope = 0.01) {
    return detail::unary(
        a, "leaky_relu", [slope](double x) { return x > 0.0 ? x : slope * x; },
        [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

/// Throws std::domain_error on negative input; log(0) is -inf.
inline Var log(Var a) {
    return detail::unary(
        a, "log",
        [](double x) {
            if (x < 0.0) throw std::domain_error("log: negative argument");
            return std::log(x);
        },
        [](double x, double) { return 1.0 / x; });
}

inline Var exp(Var a) {
    return detail::unary(
        a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

/// Subgradient 0 at 0.
inline Var abs(Var a) {
    return detail::unary(
        a, "abs", [](double x) { return std::fabs(x); },
        [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

inline Var square(Var a) {
    return detail::unary(
        a, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

inline Var sqrt(Var a) {
    return detail::unary(
        a, "sqrt",
        [](double x) {
            if (x < 0.0) throw std::domain_error("sqrt: negative argument");
            return std::sqrt(x);
        },
        [](double, double y) { return 0.5 / y; });
}

/// max(x, floor); gradient passes only where x > floor.
inline Var clamp_min(Var a, double floor) {
    return detail::unary(
        a, "clamp_min", [floor](double x) { return x > floor ? x : floor; },
        [floor](double x, double) { return x > floor ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

inline Var sum(Var a) {
    Tape& t = detail::tape_of(a);
    const Tensor& x = t.value(a);
    double s = 0.0;
    for (double v : x.data()) s += v;
    const std::size_t ai = a.id;
    return t.push("sum", Tensor::scalar(s), t.requires_grad(a), [ai](Tape& tp, std::size_t self) {
        const double g = tp.grad_of(self)[0];
        Tensor& ga = tp.grad_slot(ai);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
}

inline Var mean(Var a) {
    const std::size_t n = detail::tape_of(a).value(a).size();
    if (n == 0) throw std::invalid_argument("mean: empty tensor");
    return scale(sum(a), 1.0 / static_cast<double>(n));
}

/// Reduce over rows: [r x c] -> [1 x c].
inline Var sum_rows(Var a) {
    Tape& t = detail::tape_of(a);
    const Tensor& x = t.value(a);
    const std::size_t r = x.rows(), c = x.cols();
    Tensor y = Tensor::matrix(1, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) y[j] += x[i * c + j];
    const std::size_t ai = a.id;
    return t.push("sum_rows", std::move(y), t.requires_grad(a), [ai, r, c](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad_of(self);
        Tensor& ga = tp.grad_slot(ai);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[j];
    });
}

/// Reduce over columns: [r x c] -> [r x 1].
inline Var sum_cols(Var a) {
    Tape& t = detail::tape_of(a);
    const Tensor& x = t.value(a);
    const std::size_t r = x.rows(), c = x.cols();
    Tensor y = Tensor::matrix(r, 1);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) y[i] += x[i * c + j];
    const std::size_t ai = a.id;
    return t.push("sum_cols", std::move(y), t.requires_grad(a), [ai, r, c](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad_of(self);
        Tensor& ga = tp.grad_slot(ai);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[i];
    });
}

/// Row-wise softmax, max-shifted.
inline Var softmax_rows(Var a) {
    Tape& t = detail::tape_of(a);
    const Tensor& x = t.value(a);
    const std::size_t r = x.rows(), c = x.cols();
    Tensor y(detail::matrix_shape(x));
    for (std::size_t i = 0; i < r; ++i) {
        const double* xi = x.data().data() + i * c;
        double* yi = y.data().data() + i * c;
        const double mx = *std::max_element(xi, xi + c);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            yi[j] = std::exp(xi[j] - mx);
            z += yi[j];
        }
        for (std::size_t j = 0; j < c; ++j) yi[j] /= z;
    }
    const std::size_t ai = a.id;
    return t.push("softmax_rows", std::move(y), t.requires_grad(a), [ai, r, c](Tape& tp, std::size_t self) {
        const Tensor& yv = tp.value(self);
        const Tensor& g = tp.grad_of(self);
        Tensor& ga = tp.grad_slot(ai);
        for (std::size_t i = 0; i < r; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * yv[i * c + j];
            for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += yv[i * c + j] * (g[i * c + j] - dot);
        }
    });
}

// ---------------------------------------------------------------------------
// Structural ops
// ---------------------------------------------------------------------------

inline Var reshape(Var a, Shape shape) {
    Tape& t = detail::tape_of(a);
    Tensor y = t.value(a).reshaped(std::move(shape));
    const std::size_t ai = a.id;
    return t.push("reshape", std::move(y), t.requires_grad(a), [ai](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad_of(self);
        Tensor& ga = tp.grad_slot(ai);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
}

/// Column-wise concatenation of matrices with equal row counts.
inline Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
    Tape& t = detail::tape_of(parts[0]);
    const std::size_t r = t.value(parts[0]).rows();
    std::vector<std::size_t> ids, widths;
    std::size_t total = 0;
    bool rg = false;
    for (const Var& p : parts) {
        detail::tape_of(parts[0], p);
        const Tensor& v = t.value(p);
        if (v.rows() != r) {
            throw std::invalid_argument("concat_cols: row mismatch " + shape_string(t.value(parts[0]).shape()) +
                                        " vs " + shape_string(v.shape()));
        }
        ids.push_back(p.id);
        widths.push_back(v.cols());
        total += v.cols();
        rg = rg || t.requires_grad(p);
    }
    Tensor y = Tensor::matrix(r, total);
    std::size_t off = 0;
    for (std::size_t p = 0; p < ids.size(); ++p) {
        const Tensor& v = t.value(ids[p]);
        for (std::size_t i = 0; i < r; ++i)
            std::copy_n(v.data().data() + i * widths[p], widths[p], y.data().data() + i * total + off);
        off += widths[p];
    }
    return t.push("concat_cols", std::move(y), rg,
                  [ids = std::move(ids), widths = std::move(widths), r, total](Tape& tp, std::size_t self) {
                      const Tensor& g = tp.grad_of(self);
                      std::size_t off = 0;
                      for (std::size_t p = 0; p < ids.size(); ++p) {
                          if (tp.requires_grad(ids[p])) {
                              Tensor& gp = tp.grad_slot(ids[p]);
                              for (std::size_t i = 0; i < r; ++i)
                                  for (std::size_t j = 0; j < widths[p]; ++j)
                                      gp[i * widths[p] + j] += g[i * total + off + j];
                          }
                          off += widths[p];
                      }
                  });
}

inline Var concat_cols(std::initializer_list<Var> parts) {
    return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

/// Columns [begin, end).
inline Var slice_cols(Var a, std::size_t begin, std::size_t end) {
    Tape& t = detail::tape_of(a);
    const Tensor& x = t.value(a);
    const std::size_t r = x.rows(), c = x.cols();
    if (begin > end || end > c) throw std::invalid_argument("slice_cols: range out of bounds");
    const std::size_t w = end - begin;
    Tensor y = Tensor::matrix(r, w);
    for (std::size_t i = 0; i < r; ++i)
        std::copy_n(x.data().data() + i * c + begin, w, y.data().data() + i * w);
    const std::size_t ai = a.id;
    return t.push("slice_cols", std::move(y), t.requires_grad(a), [ai, r, c, begin, w](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad_of(self);
        Tensor& ga = tp.grad_slot(ai);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < w; ++j) ga[i * c + begin + j] += g[i * w + j];
    });
}

/// Rows [begin, end).
inline Var slice_rows(Var a, std::size_t begin, std::size_t end) {
    Tape& t = detail::tape_of(a);
    const Tensor& x = t.value(a);
    const std::size_t r = x.rows(), c = x.cols();
    if (begin > end || end > r) throw std::invalid_argument("slice_rows: range out of bounds");
    Tensor y = Tensor::matrix(end - begin, c);
    std::copy_n(x.data().data() + begin * c, (end - begin) * c, y.data().data());
    const std::size_t ai = a.id;
    return t.push("slice_rows", std::move(y), t.requires_grad(a), [ai, c, begin](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad_of(self);
        Tensor& ga = tp.grad_slot(ai);
        for (std::size_t i = 0; i < g.size(); ++i) ga[begin * c + i] += g[i];
    });
}

/// out[i, :] = a[index[i], :]
inline Var gather_rows(Var a, std::vector<std::size_t> index) {
    Tape& t = detail::tape_of(a);
    const Tensor& x = t.value(a);
    const std::size_t r = x.rows(), c = x.cols();
    Tensor y = Tensor::matrix(index.size(), c);
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= r) throw std::invalid_argument("gather_rows: index out of range");
        std::copy_n(x.data().data() + index[i] * c, c, y.data().data() + i * c);
    }
    const std::size_t ai = a.id;
    return t.push("gather_rows", std::move(y), t.requires_grad(a),
                  [ai, c, index = std::move(index)](Tape& tp, std::size_t self) {
                      const Tensor& g = tp.grad_of(self);
                      Tensor& ga = tp.grad_slot(ai);
                      for (std::size_t i = 0; i < index.size(); ++i)
                          for (std::size_t j = 0; j < c; ++j) ga[index[i] * c + j] += g[i * c + j];
                  });
}

enum class SegmentReduce { sum, mean, max };

/// Reduce rows sharing a segment id: out[s, :] = reduce{ a[i, :] : segment[i] == s }.
/// Every segment in [0, num_segments) must be non-empty.
inline Var segment_reduce(Var a, std::vector<std::size_t> segment, std::size_t num_segments, SegmentReduce kind) {
    Tape& t = detail::tape_of(a);
    const Tensor& x = t.value(a);
    const std::size_t r = x.rows(), c = x.cols();
    if (segment.size() != r) throw std::invalid_argument("segment_reduce: one segment id per row required");
    std::vector<std::size_t> count(num_segments, 0);
    for (std::size_t s : segment) {
        if (s >= num_segments) throw std::invalid_argument("segment_reduce: segment id out of range");
        ++count[s];
    }
    for (std::size_t n : count)
        if (n == 0) throw std::invalid_argument("segment_reduce: empty segment");

    Tensor y = Tensor::matrix(num_segments, c,
                              kind == SegmentReduce::max ? -std::numeric_limits<double>::infinity() : 0.0);
    std::vector<std::size_t> argmax(kind == SegmentReduce::max ? num_segments * c : 0, 0);
    for (std::size_t i = 0; i < r; ++i) {
        const std::size_t s = segment[i];
        for (std::size_t j = 0; j < c; ++j) {
            const double v = x[i * c + j];
            if (kind == SegmentReduce::max) {
                if (v > y[s * c + j]) {
                    y[s * c + j] = v;
                    argmax[s * c + j] = i;
                }
            } else {
                y[s * c + j] += v;
            }
        }
    }
    if (kind == SegmentReduce::mean) {
        for (std::size_t s = 0; s < num_segments; ++s)
            for (std::size_t j = 0; j < c; ++j) y[s * c + j] /= static_cast<double>(count[s]);
    }
    const std::size_t ai = a.id;
    return t.push("segment_reduce", std::move(y), t.requires_grad(a),
                  [ai, c, kind, segment = std::move(segment), count = std::move(count),
                   argmax = std::move(argmax)](Tape& tp, std::size_t self) {
                      const Tensor& g = tp.grad_of(self);
                      Tensor& ga = tp.grad_slot(ai);
                      if (kind == SegmentReduce::max) {
                          for (std::size_t k = 0; k < argmax.size(); ++k) ga[argmax[k] * c + k % c] += g[k];
                          return;
                      }
                      for (std::size_t i = 0; i < segment.size(); ++i) {
                          const std::size_t s = segment[i];
                          const double w = kind == SegmentReduce::mean ? 1.0 / static_cast<double>(count[s]) : 1.0;
                          for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += w * g[s * c + j];
                      }
                  });
}

inline Var segment_sum(Var a, std::vector<std::size_t> segment, std::size_t n) {
    return segment_reduce(a, std::move(segment), n, SegmentReduce::sum);
}

inline Var segment_mean(Var a, std::vector<std::size_t> segment, std::size_t n) {
    return segment_reduce(a, std::move(segment), n, SegmentReduce::mean);
}

inline Var segment_max(Var a, std::vector<std::size_t> segment, std::size_t n) {
    return segment_reduce(a, std::move(segment), n, SegmentReduce::max);
}

// ---------------------------------------------------------------------------
// Gradient routing
// ---------------------------------------------------------------------------

/// Same value, no gradient.
inline Var stop_gradient(Var a) {
    Tape& t = detail::tape_of(a);
    return t.constant(t.value(a));
}

/// Forward value is exactly `forward_value`; the incoming gradient is passed to
/// `a` unchanged. Equivalent to forward_value - [a]_const + a, without the
/// rounding that the explicit sum would introduce in the forward value.
inline Var straight_through(Var a, Tensor forward_value) {
    Tape& t = detail::tape_of(a);
    const Tensor& x = t.value(a);
    if (forward_value.size() != x.size()) throw std::invalid_argument("straight_through: shape mismatch");
    forward_value = forward_value.reshaped(x.shape());
    const std::size_t ai = a.id;
    return t.push("straight_through", std::move(forward_value), t.requires_grad(a),
                  [ai](Tape& tp, std::size_t self) {
                      const Tensor& g = tp.grad_of(self);
                      Tensor& ga = tp.grad_slot(ai);
                      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                  });
}

}  // namespace gnnassoc::ad
