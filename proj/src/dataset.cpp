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

#include "mlfsic/dataset.hpp"

#include <algorithm>
#include <set>

#include "mlfsic/errors.hpp"

namespace mlfsic {

bool FeatureMap::has_label(std::string_view label) const {
  return std::find(labels.begin(), labels.end(), label) != labels.end();
}

FeatureMap make_feature_map(std::string image_id, Eigen::MatrixXd local,
                            int height, int width,
                            std::vector<std::string> labels) {
  if (height < 1 || width < 1 || local.rows() < 1 ||
      local.cols() != static_cast<Eigen::Index>(height) * width) {
    throw DimensionError("feature map '" + image_id + "': extents do not match payload");
  }
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return FeatureMap{std::move(image_id), std::move(local), height, width,
                    std::move(labels)};
}

std::string_view to_string(SplitRole role) {
  switch (role) {
    case SplitRole::kTrain:
      return "train";
    case SplitRole::kVal:
      return "val";
    case SplitRole::kTest:
      return "test";
  }
  return "?";
}

SplitRole split_role_from_string(std::string_view name) {
  if (name == "train") return SplitRole::kTrain;
  if (name == "val") return SplitRole::kVal;
  if (name == "test") return SplitRole::kTest;
  throw ConfigError("unknown split '" + std::string(name) + "'");
}

const std::vector<std::string>& SplitLabels::of(SplitRole role) const {
  switch (role) {
    case SplitRole::kTrain:
      return train;
    case SplitRole::kVal:
      return val;
    case SplitRole::kTest:
      break;
  }
  return test;
}

const std::vector<FeatureMap>& DatasetSplit::images(SplitRole role) const {
  switch (role) {
    case SplitRole::kTrain:
      return train;
    case SplitRole::kVal:
      return val;
    case SplitRole::kTest:
      break;
  }
  return test;
}

std::vector<FeatureMap>& DatasetSplit::images(SplitRole role) {
  return const_cast<std::vector<FeatureMap>&>(
      static_cast<const DatasetSplit&>(*this).images(role));
}

namespace {

bool contains(const std::vector<std::string>& set, const std::string& label) {
  return std::find(set.begin(), set.end(), label) != set.end();
}

bool any_of_set(const std::vector<std::string>& set,
                std::span<const std::string> labels) {
  return std::any_of(labels.begin(), labels.end(),
                     [&](const std::string& l) { return contains(set, l); });
}

}  // namespace

bool admissible(const SplitLabels& split, SplitRole role,
                std::span<const std::string> labels) {
  switch (role) {
    case SplitRole::kTest:
      return any_of_set(split.test, labels);
    case SplitRole::kVal:
      return any_of_set(split.val, labels) && !any_of_set(split.test, labels);
    case SplitRole::kTrain:
      return any_of_set(split.train, labels) && !any_of_set(split.val, labels) &&
             !any_of_set(split.test, labels);
  }
  return false;
}

void validate_split(const DatasetSplit& split) {
  std::set<std::string> seen;
  for (SplitRole role : {SplitRole::kTrain, SplitRole::kVal, SplitRole::kTest}) {
    for (const auto& label : split.labels.of(role)) {
      if (!seen.insert(label).second) {
        throw Error("label '" + label + "' appears in more than one split");
      }
    }
  }
  for (SplitRole role : {SplitRole::kTrain, SplitRole::kVal, SplitRole::kTest}) {
    for (const auto& image : split.images(role)) {
      if (image.labels.empty()) {
        throw Error("image '" + image.image_id + "' has no labels");
      }
      if (!admissible(split.labels, role, image.labels)) {
        throw Error("image '" + image.image_id + "' violates the " +
                    std::string(to_string(role)) + " filtering rule");
      }
    }
  }
}

}  // namespace mlfsic
