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

#ifndef MLFSIC_ADAM_HPP_
#define MLFSIC_ADAM_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

#include "mlfsic/errors.hpp"

namespace mlfsic {

struct AdamState {
  std::uint64_t step_count = 0;
  Eigen::MatrixXd first_moment;
  Eigen::MatrixXd second_moment;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState zeros(Eigen::Index rows, Eigen::Index cols) {
    AdamState s;
    s.first_moment = Eigen::MatrixXd::Zero(rows, cols);
    s.second_moment = Eigen::MatrixXd::Zero(rows, cols);
    return s;
  }
};

// One bias-corrected Adam update of `param` in place.
template <typename DerivedP, typename DerivedG>
void adam_step(Eigen::MatrixBase<DerivedP>& param,
               const Eigen::MatrixBase<DerivedG>& grad, AdamState& state,
               double lr) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols() ||
      state.first_moment.rows() != param.rows() ||
      state.first_moment.cols() != param.cols() ||
      state.second_moment.rows() != param.rows() ||
      state.second_moment.cols() != param.cols()) {
    throw DimensionError("adam_step: shape mismatch");
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad;
  state.second_moment = state.beta2 * state.second_moment +
                        (1.0 - state.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  param -= (lr * (state.first_moment.array() / c1) /
            ((state.second_moment.array() / c2).sqrt() + state.epsilon))
               .matrix();
}

}  // namespace mlfsic

#endif  // MLFSIC_ADAM_HPP_
