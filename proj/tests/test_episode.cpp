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

#include <map>
#include <random>
#include <set>

#include "mlfsic/episode.hpp"
#include "mlfsic/errors.hpp"
#include "mlfsic/synthetic.hpp"

namespace mlfsic {
namespace {

void expect_valid(const Episode& ep, std::span<const std::string> labels, int qpl) {
  const std::size_t c = labels.size();
  ASSERT_EQ(ep.labels.size(), c);
  ASSERT_EQ(ep.support.size(), c);
  ASSERT_EQ(ep.query.size(), c * static_cast<std::size_t>(qpl));
  std::set<std::string> support_ids;
  for (const auto* img : ep.support) support_ids.insert(img->image_id);
  ASSERT_EQ(support_ids.size(), c);
  std::set<std::string> query_ids;
  for (const auto* img : ep.query) {
    ASSERT_EQ(support_ids.count(img->image_id), 0u);
    query_ids.insert(img->image_id);
  }
  ASSERT_EQ(query_ids.size(), ep.query.size());
  for (std::size_t k = 0; k < c; ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    ASSERT_GE(ep.support_truth.col(col).sum(), 1.0);
    ASSERT_LE(ep.support_truth.col(col).sum(), static_cast<double>(c));
    ASSERT_GE(ep.query_truth.col(col).sum(), static_cast<double>(qpl));
  }
  for (std::size_t i = 0; i < ep.support.size(); ++i)
    for (std::size_t k = 0; k < c; ++k)
      ASSERT_EQ(ep.support_truth(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)),
                ep.support[i]->has_label(labels[k]) ? 1.0 : 0.0);
  for (std::size_t i = 0; i < ep.query.size(); ++i)
    for (std::size_t k = 0; k < c; ++k)
      ASSERT_EQ(ep.query_truth(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)),
                ep.query[i]->has_label(labels[k]) ? 1.0 : 0.0);
}

TEST(RestrictGroundTruth, Examples) {
  const std::vector<std::string> c{"dog", "sofa", "cat"};
  const std::vector<std::string> img{"cat", "dog"};
  EXPECT_EQ(restrict_ground_truth(img, c), Eigen::RowVector3d(1, 0, 1));
  const std::vector<std::string> other{"zebra"};
  EXPECT_TRUE(restrict_ground_truth(other, c).isZero(0.0));
}

TEST(RestrictGroundTruth, MatchesSetOracle) {
  std::mt19937_64 rng(1);
  std::vector<std::string> universe;
  for (int i = 0; i < 12; ++i) universe.push_back("t" + std::to_string(i));
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> img, c;
    for (const auto& u : universe) {
      if (coin(rng)) img.push_back(u);
      if (coin(rng)) c.push_back(u);
    }
    if (c.empty()) continue;
    const std::set<std::string> s(img.begin(), img.end());
    const Eigen::RowVectorXd row = restrict_ground_truth(img, c);
    for (std::size_t i = 0; i < c.size(); ++i)
      EXPECT_EQ(row[static_cast<Eigen::Index>(i)], s.count(c[i]) ? 1.0 : 0.0);
  }
}

TEST(SampleEpisode, DegenerateSingleImage) {
  std::vector<FeatureMap> pool{
      make_feature_map("only", Eigen::MatrixXd::Ones(2, 1), 1, 1, {"a"})};
  const std::vector<std::string> labels{"a"};
  const Episode ep = sample_episode(pool, labels, 0, 9);
  ASSERT_EQ(ep.support.size(), 1u);
  EXPECT_EQ(ep.support[0]->image_id, "only");
  EXPECT_TRUE(ep.query.empty());
}

TEST(SampleEpisode, InsufficientCandidatesNamesLabel) {
  std::vector<FeatureMap> pool{
      make_feature_map("x", Eigen::MatrixXd::Ones(2, 1), 1, 1, {"a"}),
      make_feature_map("y", Eigen::MatrixXd::Ones(2, 1), 1, 1, {"a", "b"})};
  const std::vector<std::string> labels{"a", "b"};
  try {
    sample_episode(pool, labels, 1, 1);
    FAIL();
  } catch (const SamplingError& e) {
    EXPECT_EQ(e.label(), "b");
  }
}

TEST(SampleEpisode, ExhaustionFailsAfterRetries) {
  // Both labels have two candidates but share one image: no draw can give
  // each label a support image and a query image.
  std::vector<FeatureMap> pool{
      make_feature_map("x", Eigen::MatrixXd::Ones(2, 1), 1, 1, {"a", "b"}),
      make_feature_map("y", Eigen::MatrixXd::Ones(2, 1), 1, 1, {"a"}),
      make_feature_map("z", Eigen::MatrixXd::Ones(2, 1), 1, 1, {"b"})};
  const std::vector<std::string> labels{"a", "b"};
  EXPECT_THROW(sample_episode(pool, labels, 2, 1), SamplingError);
}

class SyntheticEpisodes : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { data_ = new SyntheticDataset(generate_synthetic({}, 4)); }
  static void TearDownTestSuite() {
    delete data_;
    data_ = nullptr;
  }
  static SyntheticDataset* data_;
};
SyntheticDataset* SyntheticEpisodes::data_ = nullptr;

TEST_F(SyntheticEpisodes, InvariantScan) {
  for (auto role : {SplitRole::kTrain, SplitRole::kTest}) {
    const auto& labels = data_->split.labels.of(role);
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
      const Episode ep = sample_episode(data_->split.images(role), labels, 4, seed);
      expect_valid(ep, labels, 4);
    }
  }
}

TEST_F(SyntheticEpisodes, DeterministicPerSeed) {
  const auto& labels = data_->split.labels.train;
  const Episode a = sample_episode(data_->split.train, labels, 4, 77);
  const Episode b = sample_episode(data_->split.train, labels, 4, 77);
  const Episode c = sample_episode(data_->split.train, labels, 4, 78);
  EXPECT_EQ(a.support, b.support);
  EXPECT_EQ(a.query, b.query);
  EXPECT_EQ(a.query_truth, b.query_truth);
  EXPECT_NE(a.query, c.query);
  EXPECT_EQ(a.labels, labels);
}

TEST(SampleEpisode, SupportDrawIsUniform) {
  std::vector<FeatureMap> pool;
  const std::vector<std::string> labels{"a", "b", "c"};
  for (const auto& l : labels)
    for (int i = 0; i < 10; ++i)
      pool.push_back(make_feature_map(l + std::to_string(i), Eigen::MatrixXd::Ones(1, 1),
                                      1, 1, {l}));
  std::map<std::string, int> counts;
  const int trials = 5000;
  for (int s = 0; s < trials; ++s) {
    const Episode ep = sample_episode(pool, labels, 2, static_cast<std::uint64_t>(s));
    for (const auto* img : ep.support)
      if (img->has_label("a")) ++counts[img->image_id];
  }
  ASSERT_EQ(counts.size(), 10u);
  const double expected = trials / 10.0;
  double chi2 = 0.0;
  for (const auto& [id, n] : counts) chi2 += (n - expected) * (n - expected) / expected;
  EXPECT_LT(chi2, 27.88);  // 9 degrees of freedom, p = 0.001
}

}  // namespace
}  // namespace mlfsic
