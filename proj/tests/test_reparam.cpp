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
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gnnassoc/reparam.hpp"
#include "test_support.hpp"

using namespace gnnassoc;
using namespace gnnassoc::reparam;

namespace {

ad::Tensor positive_tensor(std::size_t r, std::size_t c, Rng& rng) {
    return test_support::random_tensor({r, c}, rng, 0.01, 3.0);
}

}  // namespace

TEST(Gumbel, FixedPointOfTransform) { EXPECT_EQ(gumbel_from_uniform(std::exp(-1.0)), 0.0); }

TEST(Gumbel, MomentsMatchStandardGumbel) {
    Rng rng(2024);
    const ad::Tensor g = sample_gumbel({1000000}, rng);
    double mean = 0.0;
    for (double x : g.data()) mean += x;
    mean /= static_cast<double>(g.size());
    double var = 0.0;
    for (double x : g.data()) var += (x - mean) * (x - mean);
    var /= static_cast<double>(g.size() - 1);
    EXPECT_NEAR(mean, std::numbers::egamma, 0.01);
    EXPECT_NEAR(var, std::numbers::pi * std::numbers::pi / 6.0, 0.02);
}

TEST(Gumbel, MaxTrickMatchesCategorical) {
    const std::vector<double> beta{0.1, 0.5, 1.4, 2.0};
    double total = 0.0;
    for (double b : beta) total += b;
    Rng rng(7);
    const int n = 100000;
    std::vector<int> counts(beta.size(), 0);
    for (int i = 0; i < n; ++i) {
        std::size_t best = 0;
        double best_v = -INFINITY;
        for (std::size_t j = 0; j < beta.size(); ++j) {
            const double v = std::log(beta[j]) + gumbel_from_uniform(rng.uniform_open());
            if (v > best_v) {
                best_v = v;
                best = j;
            }
        }
        ++counts[best];
    }
    for (std::size_t j = 0; j < beta.size(); ++j) {
        const double p = beta[j] / total;
        const double sigma = std::sqrt(n * p * (1.0 - p));
        EXPECT_NEAR(counts[j], n * p, 3.0 * sigma) << "category " << j;
    }
}

TEST(GumbelSoftmax, UniformBetaWithoutNoiseIsUniform) {
    ad::Tape tape;
    ad::Var d = gumbel_softmax(tape.constant(ad::Tensor::matrix(2, 4, 0.7)), 1.0, ad::Tensor::matrix(2, 4));
    for (double x : tape.value(d).data()) EXPECT_DOUBLE_EQ(x, 0.25);
}

TEST(GumbelSoftmax, SmallTemperatureApproachesOneHot) {
    Rng rng(3);
    for (int t = 0; t < 100; ++t) {
        ad::Tape tape;
        const ad::Tensor beta = positive_tensor(1, 3, rng);
        const ad::Tensor g = sample_gumbel({1, 3}, rng);
        std::vector<double> z;
        for (std::size_t j = 0; j < 3; ++j) z.push_back(std::log(beta[j]) + g[j]);
        std::sort(z.begin(), z.end());
        // Require the top two logits to differ by at least 0.02 (20 tau).
        if (z[2] - z[1] < 0.02) continue;
        ad::Var d = gumbel_softmax(tape.constant(beta), 1e-3, g);
        double mx = 0.0;
        for (double x : tape.value(d).data()) mx = std::max(mx, x);
        EXPECT_GT(mx, 1.0 - 1e-6);
    }
}

TEST(GumbelSoftmax, InvariantToBetaScale) {
    Rng rng(4);
    const ad::Tensor beta = positive_tensor(3, 2, rng);
    const ad::Tensor g = sample_gumbel({3, 2}, rng);
    ad::Tensor scaled = beta;
    for (double& x : scaled.storage()) x *= 37.5;
    ad::Tape tape;
    const ad::Tensor a = tape.value(gumbel_softmax(tape.constant(beta), 0.8, g));
    const ad::Tensor b = tape.value(gumbel_softmax(tape.constant(scaled), 0.8, g));
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
}

TEST(GumbelSoftmax, ZeroBetaIsClamped) {
    ad::Tape tape;
    ad::Var d = gumbel_softmax(tape.constant(ad::Tensor::matrix(1, 2, {0.0, 1.0})), 1.0, ad::Tensor::matrix(1, 2));
    EXPECT_TRUE(tape.value(d).all_finite());
    EXPECT_NEAR(tape.value(d)[0], 1e-20, 1e-30);
}

TEST(GumbelSoftmax, GradientMatchesFiniteDifferences) {
    Rng rng(5);
    for (int t = 0; t < 10; ++t) {
        const ad::Tensor g = sample_gumbel({3, 3}, rng);
        const ad::Tensor w = test_support::random_tensor({3, 3}, rng);
        auto build = [&](ad::Tape& tape, const std::vector<ad::Var>& v) {
            ad::Var d = gumbel_softmax(v[0], 0.7, g);
            return ad::sum(ad::mul(ad::square(d), tape.constant(w)));
        };
        EXPECT_LT(test_support::max_gradient_error(build, {positive_tensor(3, 3, rng)}), 1e-6);
    }
}

TEST(StraightThrough, ForwardIsArgmaxOneHot) {
    ad::Tape tape;
    ad::Var d = straight_through(tape.constant(ad::Tensor::matrix(1, 2, {0.6, 0.4})));
    EXPECT_EQ(tape.value(d), ad::Tensor::matrix(1, 2, {1.0, 0.0}));
}

TEST(StraightThrough, TieGoesToLowestIndex) {
    ad::Tape tape;
    ad::Var d = straight_through(tape.constant(ad::Tensor::matrix(1, 3, 1.0 / 3.0)));
    EXPECT_EQ(tape.value(d), ad::Tensor::matrix(1, 3, {1.0, 0.0, 0.0}));
}

TEST(StraightThrough, ForwardRowsAreExactlyOneHot) {
    Rng rng(6);
    for (int t = 0; t < 2000; ++t) {
        const std::size_t K = 1 + rng.below(6), M = 1 + rng.below(5);
        ad::Tape tape;
        ad::Var d = straight_through(gumbel_softmax(tape.constant(positive_tensor(K, M, rng)), rng.uniform(0.05, 5.0),
                                                    sample_gumbel({K, M}, rng)));
        const ad::Tensor& v = tape.value(d);
        for (std::size_t k = 0; k < K; ++k) {
            int ones = 0;
            for (std::size_t m = 0; m < M; ++m) {
                ASSERT_TRUE(v.at(k, m) == 0.0 || v.at(k, m) == 1.0);
                ones += v.at(k, m) == 1.0;
            }
            ASSERT_EQ(ones, 1);
        }
    }
}

// The STGS gradient is the GS Jacobian applied to the downstream gradient taken
// at the forward (one-hot) value. The GS side is built as the linearization
// w . d_GS with w = df/dd evaluated at the one-hot point.
TEST(StraightThrough, GradientEqualsGsPath) {
    Rng rng(8);
    for (int t = 0; t < 100; ++t) {
        const ad::Tensor beta = positive_tensor(2, 3, rng);
        const ad::Tensor g = sample_gumbel({2, 3}, rng);
        const ad::Tensor c = test_support::random_tensor({2, 3}, rng);
        auto downstream = [&](ad::Tape& tape, ad::Var d) {
            return ad::sum(ad::mul(ad::exp(ad::mul(d, tape.constant(c))), tape.constant(c)));
        };

        ad::Tape st;
        ad::Var b1 = st.leaf(beta);
        ad::Var d1 = straight_through(gumbel_softmax(b1, 1.0, g));
        st.backward(downstream(st, d1));
        const ad::Tensor grad_st = st.grad(b1);

        ad::Tape probe;
        ad::Var h = probe.leaf(st.value(d1));
        probe.backward(downstream(probe, h));
        const ad::Tensor w = probe.grad(h);

        ad::Tape gs;
        ad::Var b2 = gs.leaf(beta);
        gs.backward(ad::sum(ad::mul(gumbel_softmax(b2, 1.0, g), gs.constant(w))));
        const ad::Tensor& grad_gs = gs.grad(b2);
        for (std::size_t i = 0; i < beta.size(); ++i)
            EXPECT_LT(test_support::relative_error(grad_st[i], grad_gs[i], 1e-300), 1e-10);
    }
}

TEST(SoftmaxHead, EqualsNormalizedBeta) {
    Rng rng(9);
    const ad::Tensor beta = positive_tensor(4, 3, rng);
    ad::Tape tape;
    const ad::Tensor& p = tape.value(softmax_head(tape.constant(beta)));
    for (std::size_t k = 0; k < 4; ++k) {
        double s = 0.0;
        for (std::size_t m = 0; m < 3; ++m) s += beta.at(k, m);
        for (std::size_t m = 0; m < 3; ++m) EXPECT_NEAR(p.at(k, m), beta.at(k, m) / s, 1e-15);
    }
}

TEST(SoftmaxHead, UniformBetaGivesUniform) {
    ad::Tape tape;
    for (double x : tape.value(softmax_head(tape.constant(ad::Tensor::matrix(1, 5, 2.0)))).data()) EXPECT_DOUBLE_EQ(x, 0.2);
}

TEST(ApplyHead, ModesExposeExpectedForward) {
    Rng rng(10);
    const ad::Tensor beta = positive_tensor(5, 3, rng);
    for (HeadMode mode : {HeadMode::gs, HeadMode::stgs, HeadMode::softmax, HeadMode::softmax_st}) {
        ad::Tape tape;
        Rng noise(11);
        const HeadOutput out = apply_head(tape.constant(beta), CategoricalHead{mode}, &noise);
        const ad::Tensor& soft = tape.value(out.soft);
        for (std::size_t k = 0; k < 5; ++k) {
            double s = 0.0;
            for (std::size_t m = 0; m < 3; ++m) {
                EXPECT_GE(soft.at(k, m), 0.0);
                s += soft.at(k, m);
            }
            EXPECT_NEAR(s, 1.0, 1e-9);
        }
        EXPECT_EQ(out.hard, one_hot_rows(soft));
        if (is_straight_through(mode)) {
            EXPECT_EQ(tape.value(out.forward), out.hard);
        } else {
            EXPECT_EQ(tape.value(out.forward), soft);
        }
    }
}

TEST(ApplyHead, NoiseFreeDecisionIsArgmaxBeta) {
    Rng rng(12);
    const ad::Tensor beta = positive_tensor(6, 4, rng);
    ad::Tape tape;
    const HeadOutput out = apply_head(tape.constant(beta), CategoricalHead{HeadMode::stgs}, nullptr);
    EXPECT_EQ(out.hard, one_hot_rows(beta));
}

TEST(ApplyHead, RejectsBadTemperature) {
    ad::Tape tape;
    EXPECT_THROW(apply_head(tape.constant(ad::Tensor::matrix(1, 2, 1.0)), CategoricalHead{HeadMode::gs, 0.0}, nullptr),
                 std::invalid_argument);
    EXPECT_THROW(head_mode_from_string("gumbel"), std::invalid_argument);
}
