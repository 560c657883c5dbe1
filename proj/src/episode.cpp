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

#include "mlfsic/episode.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <random>

#include "mlfsic/errors.hpp"

namespace mlfsic {

Eigen::RowVectorXd restrict_ground_truth(std::span<const std::string> image_labels,
                                         std::span<const std::string> labels) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (std::find(image_labels.begin(), image_labels.end(), labels[i]) != image_labels.end()) {
      row[static_cast<Eigen::Index>(i)] = 1.0;
    }
  }
  return row;
}

namespace {

struct Draw {
  std::vector<std::size_t> support;
  std::vector<std::size_t> query;
};

// One attempt; nullopt when some label runs out of untaken candidates.
std::optional<Draw> attempt(const std::vector<std::vector<std::size_t>>& candidates,
                            std::size_t pool_size, int queries_per_label,
                            std::mt19937_64& rng, std::size_t& blocking) {
  std::vector<char> taken(pool_size, 0);
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> free;

  auto draw = [&](std::size_t label, std::vector<std::size_t>& into) {
    free.clear();
    for (std::size_t idx : candidates[label]) {
      if (!taken[idx]) free.push_back(idx);
    }
    if (free.empty()) return false;
    std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
    const std::size_t chosen = free[pick(rng)];
    taken[chosen] = 1;
    into.push_back(chosen);
    return true;
  };

  Draw out;
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t label : order) {
    if (!draw(label, out.support)) {
      blocking = label;
      return std::nullopt;
    }
  }
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t label : order) {
    for (int k = 0; k < queries_per_label; ++k) {
      if (!draw(label, out.query)) {
        blocking = label;
        return std::nullopt;
      }
    }
  }
  return out;
}

}  // namespace

Episode sample_episode(std::span<const FeatureMap> images,
                       std::span<const std::string> labels, int queries_per_label,
                       std::uint64_t seed) {
  if (labels.empty()) {
    throw SamplingError("sample_episode: empty label set", "");
  }
  if (queries_per_label < 0) {
    throw SamplingError("sample_episode: negative queries_per_label", "");
  }
  std::vector<std::vector<std::size_t>> candidates(labels.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (std::size_t c = 0; c < labels.size(); ++c) {
      if (images[i].has_label(labels[c])) candidates[c].push_back(i);
    }
  }
  const std::size_t needed = 1 + static_cast<std::size_t>(queries_per_label);
  for (std::size_t c = 0; c < labels.size(); ++c) {
    if (candidates[c].size() < needed) {
      throw SamplingError("label '" + labels[c] + "' has " +
                              std::to_string(candidates[c].size()) +
                              " candidate images, needs " + std::to_string(needed),
                          labels[c]);
    }
  }

  std::mt19937_64 rng(seed);
  std::size_t blocking = 0;
  for (int tries = 0; tries < kMaxSamplingAttempts; ++tries) {
    auto draw = attempt(candidates, images.size(), queries_per_label, rng, blocking);
    if (!draw) continue;
    Episode ep;
    ep.labels.assign(labels.begin(), labels.end());
    const auto n_labels = static_cast<Eigen::Index>(labels.size());
    ep.support_truth.resize(static_cast<Eigen::Index>(draw->support.size()), n_labels);
    ep.query_truth.resize(static_cast<Eigen::Index>(draw->query.size()), n_labels);
    for (std::size_t i = 0; i < draw->support.size(); ++i) {
      const FeatureMap& img = images[draw->support[i]];
      ep.support.push_back(&img);
      ep.support_truth.row(static_cast<Eigen::Index>(i)) = restrict_ground_truth(img.labels, labels);
    }
    for (std::size_t i = 0; i < draw->query.size(); ++i) {
      const FeatureMap& img = images[draw->query[i]];
      ep.query.push_back(&img);
      ep.query_truth.row(static_cast<Eigen::Index>(i)) = restrict_ground_truth(img.labels, labels);
    }
    return ep;
  }
  throw SamplingError("no valid episode after " + std::to_string(kMaxSamplingAttempts) +
                          " attempts; label '" + labels[blocking] + "' keeps running out",
                      labels[blocking]);
}

}  // namespace mlfsic
