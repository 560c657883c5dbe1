/* Copyright 2026 The mlfsic Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mlfsic/adam.hpp"
#include "mlfsic/core_math.hpp"
#include "mlfsic/errors.hpp"
#include "test_util.hpp"

namespace mlfsic {
namespace {

using testing::random_matrix;
using testing::random_vector;

TEST(AdaptiveAvgPool, TwoByTwo) {
  Eigen::MatrixXd f(1, 4);
  f << 1, 2, 3, 4;  // [[1,2],[3,4]] row-major
  EXPECT_DOUBLE_EQ(adaptive_avg_pool(f)[0], 2.5);
}

TEST(AdaptiveAvgPool, ZeroMap) {
  EXPECT_TRUE(adaptive_avg_pool(Eigen::MatrixXd::Zero(5, 6)).isZero(0.0));
}

TEST(AdaptiveAvgPool, EmptyThrows) {
  EXPECT_THROW(adaptive_avg_pool(Eigen::MatrixXd(3, 0)), DimensionError);
}

TEST(AdaptiveAvgPool, MatchesLoopOracle) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd f = random_matrix(rng, 8, 9);
  const Eigen::VectorXd got = adaptive_avg_pool(f);
  for (int c = 0; c < 8; ++c) {
    double sum = 0.0;
    for (int r = 0; r < 3; ++r)
      for (int k = 0; k < 3; ++k) sum += f(c, r * 3 + k);
    EXPECT_NEAR(got[c], sum / 9.0, 1e-12);
  }
}

TEST(AdaptiveAvgPool, Linear) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd x = random_matrix(rng, 6, 10);
  const Eigen::MatrixXd y = random_matrix(rng, 6, 10);
  const Eigen::VectorXd lhs = adaptive_avg_pool(2.5 * x - 0.75 * y);
  const Eigen::VectorXd rhs = 2.5 * adaptive_avg_pool(x) - 0.75 * adaptive_avg_pool(y);
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CosineSim, Identities) {
  std::mt19937_64 rng(5);
  const Eigen::VectorXd u = random_vector(rng, 7);
  EXPECT_NEAR(cosine_sim(u, u), 1.0, 1e-15);
  EXPECT_NEAR(cosine_sim(u, (-u).eval()), -1.0, 1e-15);
  EXPECT_EQ(cosine_sim(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)), 0.0);
}

TEST(CosineSim, ZeroNormThrows) {
  EXPECT_THROW(cosine_sim(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3)),
               DegenerateInputError);
  EXPECT_THROW(cosine_sim(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Zero(3)),
               DegenerateInputError);
}

TEST(CosineSim, ScaleInvariant) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd u = random_vector(rng, 9);
    const Eigen::VectorXd v = random_vector(rng, 9);
    EXPECT_NEAR(cosine_sim((3.7 * u).eval(), (0.01 * v).eval()), cosine_sim(u, v), 1e-12);
  }
}

TEST(Softmax, Examples) {
  EXPECT_DOUBLE_EQ(softmax(Eigen::VectorXd::Zero(1))[0], 1.0);
  const Eigen::VectorXd half = softmax(Eigen::Vector2d(4.2, 4.2));
  EXPECT_DOUBLE_EQ(half[0], 0.5);
  EXPECT_DOUBLE_EQ(half[1], 0.5);
  const Eigen::VectorXd big = softmax(Eigen::Vector2d(1000.0, 0.0));
  EXPECT_TRUE(big.allFinite());
  EXPECT_NEAR(big[0], 1.0, 1e-15);
  EXPECT_NEAR(big[1], 0.0, 1e-15);
}

TEST(Softmax, SumsToOneAndPermutes) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd a = random_vector(rng, 11) * 20.0;
    const Eigen::VectorXd p = softmax(a);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_TRUE((p.array() > 0).all());
    Eigen::VectorXi perm = Eigen::VectorXi::LinSpaced(11, 0, 10);
    std::shuffle(perm.data(), perm.data() + perm.size(), rng);
    Eigen::VectorXd ap(11);
    for (int i = 0; i < 11; ++i) ap[i] = a[perm[i]];
    const Eigen::VectorXd pp = softmax(ap);
    for (int i = 0; i < 11; ++i) EXPECT_NEAR(pp[i], p[perm[i]], 1e-15);
  }
}

TEST(Bce, ZeroScore) {
  EXPECT_NEAR(binary_cross_entropy(0.0, 1.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(binary_cross_entropy(0.0, 0.0), std::log(2.0), 1e-15);
}

TEST(Bce, ExtendedPrecisionOracle) {
  for (const double s : {3.2, -3.2, 0.125, 17.0, -30.0}) {
    for (const double t : {0.0, 1.0}) {
      const long double ls = s;
      const long double want = std::log1p(std::exp(t == 1.0 ? -ls : ls));
      EXPECT_NEAR(binary_cross_entropy(s, t), static_cast<double>(want),
                  1e-15 * std::max(1.0, static_cast<double>(want)))
          << "s=" << s << " t=" << t;
    }
  }
}

TEST(Bce, NonNegativeAndMonotone) {
  double prev1 = std::numeric_limits<double>::infinity();
  double prev0 = -1.0;
  for (double s = -40.0; s <= 40.0; s += 0.25) {
    const double l1 = binary_cross_entropy(s, 1.0);
    const double l0 = binary_cross_entropy(s, 0.0);
    EXPECT_GE(l1, 0.0);
    EXPECT_GE(l0, 0.0);
    EXPECT_LE(l1, prev1);
    EXPECT_GE(l0, prev0);
    prev1 = l1;
    prev0 = l0;
  }
  EXPECT_TRUE(std::isfinite(binary_cross_entropy(800.0, 0.0)));
  EXPECT_TRUE(std::isfinite(binary_cross_entropy(-800.0, 1.0)));
}

double central(auto&& f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

TEST(Gradients, ScalarOpsMatchFiniteDifferences) {
  for (const double x : {-3.0, -0.7, 0.0, 0.4, 2.5}) {
    EXPECT_LT(rel_err(gelu_derivative(x), central([](double v) { return gelu(v); }, x)),
              1e-6);
    for (const double t : {0.0, 1.0}) {
      EXPECT_LT(rel_err(binary_cross_entropy_grad(x, t),
                        central([t](double v) { return binary_cross_entropy(v, t); }, x)),
                1e-6);
    }
  }
}

TEST(Gradients, CosineBackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd u = random_vector(rng, 6);
    const Eigen::VectorXd v = random_vector(rng, 6);
    const double up = 1.7;
    const auto g = cosine_sim_backward(u, v, up);
    for (int i = 0; i < 6; ++i) {
      auto fu = [&](double x) {
        Eigen::VectorXd w = u;
        w[i] = x;
        return up * cosine_sim(w, v);
      };
      auto fv = [&](double x) {
        Eigen::VectorXd w = v;
        w[i] = x;
        return up * cosine_sim(u, w);
      };
      EXPECT_LT(rel_err(g.du[i], central(fu, u[i])), 1e-6);
      EXPECT_LT(rel_err(g.dv[i], central(fv, v[i])), 1e-6);
    }
  }
}

TEST(Gradients, SoftmaxBackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  const Eigen::VectorXd a = random_vector(rng, 5);
  const Eigen::VectorXd w = random_vector(rng, 5);
  const Eigen::VectorXd g = softmax_backward(softmax(a), w);
  for (int i = 0; i < 5; ++i) {
    auto f = [&](double x) {
      Eigen::VectorXd b = a;
      b[i] = x;
      return softmax(b).dot(w);
    };
    EXPECT_LT(rel_err(g[i], central(f, a[i])), 1e-6);
  }
}

TEST(Adam, ZeroGradientKeepsParameter) {
  Eigen::MatrixXd p(2, 2);
  p << 1, -2, 3, 0.5;
  const Eigen::MatrixXd before = p;
  AdamState s = AdamState::zeros(2, 2);
  s.first_moment.setConstant(0.3);
  s.second_moment.setConstant(0.2);
  adam_step(p, Eigen::MatrixXd::Zero(2, 2), s, 1e-3);
  EXPECT_EQ(s.step_count, 1u);
  EXPECT_NEAR(s.first_moment(0, 0), 0.27, 1e-15);
  EXPECT_NEAR(s.second_moment(0, 0), 0.2 * 0.999, 1e-15);
  // Stored moments still move the parameter; fresh state does not.
  AdamState fresh = AdamState::zeros(2, 2);
  Eigen::MatrixXd q = before;
  adam_step(q, Eigen::MatrixXd::Zero(2, 2), fresh, 1e-3);
  EXPECT_EQ(q, before);
}

TEST(Adam, FirstStepIsLearningRate) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(1, 3);
  Eigen::MatrixXd g(1, 3);
  g << 0.5, -20.0, 1e-3;
  AdamState s = AdamState::zeros(1, 3);
  adam_step(p, g, s, 1e-3);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(std::abs(p(0, i)), 1e-3, 1e-7);
    EXPECT_EQ(std::signbit(p(0, i)), !std::signbit(g(0, i)));
  }
}

TEST(Adam, MatchesScalarRecurrence) {
  const double lr = 0.01;
  const double grads[3][2] = {{0.4, -1.2}, {0.1, 0.3}, {-0.8, 2.0}};
  Eigen::MatrixXd p(2, 1);
  p << 0.25, -0.5;
  AdamState s = AdamState::zeros(2, 1);
  double ref[2] = {0.25, -0.5};
  double m[2] = {0, 0};
  double v[2] = {0, 0};
  for (int t = 1; t <= 3; ++t) {
    Eigen::MatrixXd g(2, 1);
    g << grads[t - 1][0], grads[t - 1][1];
    adam_step(p, g, s, lr);
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * grads[t - 1][i];
      v[i] = 0.999 * v[i] + 0.001 * grads[t - 1][i] * grads[t - 1][i];
      const double mh = m[i] / (1.0 - std::pow(0.9, t));
      const double vh = v[i] / (1.0 - std::pow(0.999, t));
      ref[i] -= lr * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  EXPECT_NEAR(p(0, 0), ref[0], 1e-12);
  EXPECT_NEAR(p(1, 0), ref[1], 1e-12);
  EXPECT_EQ(s.step_count, 3u);
  EXPECT_TRUE((s.second_moment.array() >= 0).all());
}

TEST(Adam, ShapeMismatchThrows) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(2, 2);
  AdamState s = AdamState::zeros(2, 2);
  EXPECT_THROW(adam_step(p, Eigen::MatrixXd::Zero(2, 3), s, 1e-3), DimensionError);
  AdamState wrong = AdamState::zeros(3, 2);
  EXPECT_THROW(adam_step(p, Eigen::MatrixXd::Zero(2, 2), wrong, 1e-3), DimensionError);
}

}  // namespace
}  // namespace mlfsic
