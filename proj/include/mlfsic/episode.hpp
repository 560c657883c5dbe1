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

#ifndef MLFSIC_EPISODE_HPP_
#define MLFSIC_EPISODE_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mlfsic/dataset.hpp"

namespace mlfsic {

// One sampled task. Support and query hold non-owning pointers into the
// image pool the episode was drawn from; the pool must outlive the episode.
struct Episode {
  std::vector<std::string> labels;
  std::vector<const FeatureMap*> support;
  std::vector<const FeatureMap*> query;
  Eigen::MatrixXd support_truth;  // |S| x |C|, entries 0 or 1
  Eigen::MatrixXd query_truth;    // |Q| x |C|
};

inline constexpr int kMaxSamplingAttempts = 100;

// Support: one draw per label, labels visited in a shuffled order, each draw
// uniform over that label's images not yet taken. Query: queries_per_label
// draws per label in the same way, never reusing support images. An exhausted
// candidate pool restarts the whole episode with a fresh shuffle.
Episode sample_episode(std::span<const FeatureMap> images,
                       std::span<const std::string> labels,
                       int queries_per_label, std::uint64_t seed);

// row[i] = 1 iff labels[i] is one of `image_labels`.
Eigen::RowVectorXd restrict_ground_truth(std::span<const std::string> image_labels,
                                         std::span<const std::string> labels);

}  // namespace mlfsic

#endif  // MLFSIC_EPISODE_HPP_
