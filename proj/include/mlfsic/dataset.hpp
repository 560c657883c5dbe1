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

#ifndef MLFSIC_DATASET_HPP_
#define MLFSIC_DATASET_HPP_

#include <Eigen/Dense>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mlfsic {

// One image's local feature map. `local` is n x (h*w); spatial cell (r, c)
// lives in column r * width + c.
struct FeatureMap {
  std::string image_id;
  Eigen::MatrixXd local;
  int height = 0;
  int width = 0;
  std::vector<std::string> labels;  // sorted, unique

  Eigen::Index channels() const { return local.rows(); }
  Eigen::Index cells() const { return local.cols(); }
  bool has_label(std::string_view label) const;
};

// Builds a FeatureMap, normalising the label list to sorted-unique.
FeatureMap make_feature_map(std::string image_id, Eigen::MatrixXd local,
                            int height, int width,
                            std::vector<std::string> labels);

enum class SplitRole { kTrain, kVal, kTest };

std::string_view to_string(SplitRole role);
SplitRole split_role_from_string(std::string_view name);

struct SplitLabels {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;

  const std::vector<std::string>& of(SplitRole role) const;
};

struct DatasetSplit {
  SplitLabels labels;
  std::vector<FeatureMap> train;
  std::vector<FeatureMap> val;
  std::vector<FeatureMap> test;

  const std::vector<FeatureMap>& images(SplitRole role) const;
  std::vector<FeatureMap>& images(SplitRole role);
};

// Disjointness of the label sets plus the per-role image filtering rule.
// Throws mlfsic::Error describing the first violation.
void validate_split(const DatasetSplit& split);

// Whether an image with `labels` may belong to `role` under the filtering
// rule: train images carry no val/test label, val images carry a val label
// and no test label, test images carry a test label.
bool admissible(const SplitLabels& split, SplitRole role,
                std::span<const std::string> labels);

}  // namespace mlfsic

#endif  // MLFSIC_DATASET_HPP_
