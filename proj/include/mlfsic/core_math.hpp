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

#ifndef MLFSIC_CORE_MATH_HPP_
#define MLFSIC_CORE_MATH_HPP_

// Dense primitives shared by the model and the losses. Every function here
// is a pure free function over Eigen expressions; the reverse-mode partner of
// each differentiable op sits next to its forward definition.

#include <Eigen/Dense>

#include <algorithm>
#include <concepts>
#include <cmath>
#include <utility>

#include "mlfsic/errors.hpp"

namespace mlfsic {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Mean over the spatial cells of an n x (h*w) local feature map.
template <typename Derived>
Vec<typename Derived::Scalar> adaptive_avg_pool(
    const Eigen::MatrixBase<Derived>& local_features) {
  if (local_features.cols() == 0 || local_features.rows() == 0) {
    throw DimensionError("adaptive_avg_pool: empty feature map");
  }
  return local_features.rowwise().mean();
}

template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar cosine_sim(const Eigen::MatrixBase<DerivedU>& u,
                                     const Eigen::MatrixBase<DerivedV>& v) {
  if (u.size() != v.size()) {
    throw DimensionError("cosine_sim: length mismatch");
  }
  const auto nu = u.norm();
  const auto nv = v.norm();
  if (!(nu > 0) || !(nv > 0)) {
    throw DegenerateInputError("cosine_sim: zero-norm input");
  }
  return u.dot(v) / (nu * nv);
}

template <typename Scalar>
struct CosineGrad {
  Vec<Scalar> du;
  Vec<Scalar> dv;
};

// Gradient of upstream * cos(u, v) with respect to both arguments.
template <typename DerivedU, typename DerivedV>
CosineGrad<typename DerivedU::Scalar> cosine_sim_backward(
    const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedV>& v,
    typename DerivedU::Scalar upstream) {
  using Scalar = typename DerivedU::Scalar;
  const Scalar nu = u.norm();
  const Scalar nv = v.norm();
  if (!(nu > 0) || !(nv > 0)) {
    throw DegenerateInputError("cosine_sim_backward: zero-norm input");
  }
  const Scalar c = u.dot(v) / (nu * nv);
  CosineGrad<Scalar> g;
  g.du = upstream * (v / (nu * nv) - c * u / (nu * nu));
  g.dv = upstream * (u / (nu * nv) - c * v / (nv * nv));
  return g;
}

// Max-subtracted softmax.
template <typename Derived>
Vec<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& scores) {
  if (scores.size() == 0) {
    throw DimensionError("softmax: empty input");
  }
  Vec<typename Derived::Scalar> e =
      (scores.array() - scores.maxCoeff()).exp().matrix();
  return e / e.sum();
}

// Given p = softmax(a) and dL/dp, returns dL/da.
template <typename DerivedP, typename DerivedG>
Vec<typename DerivedP::Scalar> softmax_backward(
    const Eigen::MatrixBase<DerivedP>& probs,
    const Eigen::MatrixBase<DerivedG>& upstream) {
  const auto inner = probs.dot(upstream);
  return (probs.array() * (upstream.array() - inner)).matrix();
}

template <std::floating_point Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= 0) {
    return Scalar(1) / (Scalar(1) + std::exp(-x));
  }
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

// -[t log sigma(s) + (1 - t) log(1 - sigma(s))] in logits form.
template <std::floating_point Scalar>
Scalar binary_cross_entropy(Scalar score, Scalar target) {
  return std::max(score, Scalar(0)) - score * target +
         std::log1p(std::exp(-std::abs(score)));
}

template <std::floating_point Scalar>
Scalar binary_cross_entropy_grad(Scalar score, Scalar target) {
  return sigmoid(score) - target;
}

namespace detail {
template <typename Scalar>
constexpr Scalar kGeluScale = Scalar(0.7978845608028654);  // sqrt(2/pi)
template <typename Scalar>
constexpr Scalar kGeluCubic = Scalar(0.044715);
}  // namespace detail

// tanh approximation of GeLU.
template <std::floating_point Scalar>
Scalar gelu(Scalar x) {
  using detail::kGeluCubic;
  using detail::kGeluScale;
  const Scalar inner = kGeluScale<Scalar> * (x + kGeluCubic<Scalar> * x * x * x);
  return Scalar(0.5) * x * (Scalar(1) + std::tanh(inner));
}

template <std::floating_point Scalar>
Scalar gelu_derivative(Scalar x) {
  using detail::kGeluCubic;
  using detail::kGeluScale;
  const Scalar inner = kGeluScale<Scalar> * (x + kGeluCubic<Scalar> * x * x * x);
  const Scalar t = std::tanh(inner);
  const Scalar dinner =
      kGeluScale<Scalar> * (Scalar(1) + Scalar(3) * kGeluCubic<Scalar> * x * x);
  return Scalar(0.5) * (Scalar(1) + t) + Scalar(0.5) * x * (Scalar(1) - t * t) * dinner;
}

template <typename Derived>
Vec<typename Derived::Scalar> gelu(const Eigen::MatrixBase<Derived>& x) {
  return x.unaryExpr([](auto v) { return gelu(v); });
}

template <typename Derived>
Vec<typename Derived::Scalar> gelu_derivative(const Eigen::MatrixBase<Derived>& x) {
  return x.unaryExpr([](auto v) { return gelu_derivative(v); });
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

}  // namespace mlfsic

#endif  // MLFSIC_CORE_MATH_HPP_
