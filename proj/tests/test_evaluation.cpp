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

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"
#include "mlfsic/canonical_json.hpp"
#include "mlfsic/errors.hpp"
#include "mlfsic/evaluation.hpp"
#include "mlfsic/synthetic.hpp"

namespace mlfsic {
namespace {

class EvalFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    SyntheticSpec spec;
    spec.images_per_label = 12;
    data_ = generate_synthetic(spec, 5);
    ModelConfig cfg;
    cfg.channels = spec.channels;
    cfg.word_dim = spec.word_dim;
    cfg.joint_dim = 32;
    cfg.heads = 4;
    params_ = init_parameters(cfg, 5);
    source_ = make_episode_source(data_.split.test, data_.split.labels.test, data_.embeddings);
  }

  EvalOptions options(int episodes) const {
    EvalOptions o;
    o.episodes = episodes;
    o.seed = 11;
    return o;
  }

  // The episodes evaluate() draws for `o`, reproduced from its seed stream.
  std::vector<Episode> episodes_for(const EvalOptions& o) const {
    std::mt19937_64 rng(o.seed);
    std::vector<Episode> out;
    for (int e = 0; e < o.episodes; ++e)
      out.push_back(sample_episode(source_.images, source_.labels, o.queries_per_label, rng()));
    return out;
  }

  SyntheticDataset data_;
  ModelParameters params_;
  EpisodeSource source_;
};

TEST_F(EvalFixture, PredictEpisodeScoresEveryQueryLabelPair) {
  const Episode ep = sample_episode(source_.images, source_.labels, 4, 3);
  const PredictionBatch b =
      predict_episode(params_, ep, source_.label_vectors, PrototypeVariant::kFull, 0);
  ASSERT_EQ(b.scores.rows(), static_cast<Eigen::Index>(ep.query.size()));
  ASSERT_EQ(b.scores.cols(), 8);
  EXPECT_EQ(b.truth, ep.query_truth);
  const PrototypeSet protos = build_prototypes(params_, ep, source_.label_vectors,
                                               PrototypeVariant::kFull, DropoutSpec::off());
  const Eigen::VectorXd g = embed_image(params_, *ep.query[5]).global;
  EXPECT_NEAR(b.scores(5, 2), score_query(params_, g, protos.labels[2].prototype), 1e-12);
  EXPECT_LE(b.scores.cwiseAbs().maxCoeff(), 10.0 + 1e-12);
  const PredictionBatch top =
      predict_episode(params_, ep, source_.label_vectors, PrototypeVariant::kFull, 3);
  EXPECT_LE(top.scores.cwiseAbs().maxCoeff(), 30.0 + 1e-12);
}

TEST_F(EvalFixture, TruthScorerIsPerfect) {
  for (const Episode& ep : episodes_for(options(20))) {
    const PredictionBatch b{2.0 * ep.query_truth.array() - 1.0, ep.query_truth};
    const BatchMetrics m = batch_metrics(b);
    for (const MetricBlock& blk : {m.micro, m.macro}) {
      EXPECT_EQ(blk.precision, 1.0);
      EXPECT_EQ(blk.recall, 1.0);
      EXPECT_EQ(blk.f1, 1.0);
      EXPECT_EQ(blk.ap, 1.0);
    }
  }
}

TEST_F(EvalFixture, SingleEpisode) {
  const EvalReport r = evaluate(params_, source_, options(1));
  ASSERT_EQ(r.episodes.size(), 1u);
  EXPECT_EQ(r.mean.micro.ap, r.episodes[0].micro.ap);
  EXPECT_EQ(r.mean.macro.f1, r.episodes[0].macro.f1);
  EXPECT_EQ(r.stddev.micro.ap, 0.0);
  EXPECT_EQ(r.stddev.macro.precision, 0.0);
  EXPECT_THROW(evaluate(params_, source_, options(0)), ConfigError);
}

TEST_F(EvalFixture, EpisodeAveraging) {
  const EvalOptions o = options(6);
  const EvalReport r = evaluate(params_, source_, o);
  const auto eps = episodes_for(o);
  ASSERT_EQ(r.episodes.size(), eps.size());
  double micro = 0.0, macro = 0.0, sq = 0.0;
  for (std::size_t e = 0; e < eps.size(); ++e) {
    const BatchMetrics m = batch_metrics(
        predict_episode(params_, eps[e], source_.label_vectors, PrototypeVariant::kFull, 0));
    EXPECT_EQ(m.micro.ap, r.episodes[e].micro.ap);
    micro += m.micro.ap;
    macro += m.macro.ap;
  }
  micro /= 6.0;
  macro /= 6.0;
  for (const auto& m : r.episodes) sq += (m.micro.ap - micro) * (m.micro.ap - micro);
  EXPECT_NEAR(r.mean.micro.ap, micro, 1e-12);
  EXPECT_NEAR(r.mean.macro.ap, macro, 1e-12);
  EXPECT_NEAR(r.stddev.micro.ap, std::sqrt(sq / 6.0), 1e-12);
  EXPECT_EQ(r.pooling, ApPooling::kEpisode);
}

TEST_F(EvalFixture, GlobalPoolingConcatenatesEpisodes) {
  EvalOptions o = options(4);
  o.pooling = ApPooling::kGlobal;
  const EvalReport r = evaluate(params_, source_, o);
  PredictionBatch all;
  for (const Episode& ep : episodes_for(o)) {
    const PredictionBatch b =
        predict_episode(params_, ep, source_.label_vectors, PrototypeVariant::kFull, 0);
    const auto rows = all.scores.rows();
    all.scores.conservativeResize(rows + b.scores.rows(), b.scores.cols());
    all.truth.conservativeResize(rows + b.truth.rows(), b.truth.cols());
    all.scores.bottomRows(b.scores.rows()) = b.scores;
    all.truth.bottomRows(b.truth.rows()) = b.truth;
  }
  const BatchMetrics want = batch_metrics(all);
  EXPECT_NEAR(r.mean.micro.ap, want.micro.ap, 1e-12);
  EXPECT_NEAR(r.mean.macro.ap, want.macro.ap, 1e-12);
  EXPECT_NEAR(r.mean.micro.f1, want.micro.f1, 1e-12);
  EXPECT_EQ(r.episodes.size(), 4u);
}

TEST_F(EvalFixture, FinetuneToggle) {
  EvalOptions o = options(2);
  const EvalReport plain = evaluate(params_, source_, o);
  o.finetune = true;
  o.finetune_epochs = 0;
  const EvalReport zero = evaluate(params_, source_, o);
  EXPECT_EQ(report_json(zero, "").find("\"finetune\": true") != std::string::npos, true);
  EXPECT_EQ(zero.mean.micro.ap, plain.mean.micro.ap);
  o.finetune_epochs = 5;
  const EvalReport tuned = evaluate(params_, source_, o);
  EXPECT_NE(tuned.episodes[0].micro.ap, plain.episodes[0].micro.ap);
}

TEST_F(EvalFixture, ReportJsonIsCanonical) {
  const EvalReport a = evaluate(params_, source_, options(3));
  const EvalReport b = evaluate(params_, source_, options(3));
  const std::string ja = report_json(a, "seed = 11\nvariant = full\n");
  const std::string jb = report_json(b, "seed = 11\nvariant = full\n");
  EXPECT_EQ(ja, jb);
  const nlohmann::json doc = nlohmann::json::parse(ja);
  EXPECT_EQ(doc["episodes"], 3);
  EXPECT_EQ(doc["config"]["seed"], "11");
  EXPECT_EQ(doc["variant"], "full");
  EXPECT_EQ(doc["ap_pooling"], "episode");
  EXPECT_EQ(doc["per_episode"].size(), 3u);
  EXPECT_NEAR(doc["micro"]["ap"].get<double>(), a.mean.micro.ap, 1e-12);
  EXPECT_EQ(canonical_dump(doc), ja);
  // Top-level keys come out sorted.
  std::vector<std::string> keys;
  for (auto it = doc.begin(); it != doc.end(); ++it) keys.push_back(it.key());
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
  EXPECT_LT(ja.find("\"ap_pooling\""), ja.find("\"variant\""));
  const std::string csv = report_episodes_csv(a);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(CanonicalJson, FixedDecimals) {
  const nlohmann::json doc = {{"b", 0.5}, {"a", 1}, {"c", {{"z", true}, {"y", "s"}}}};
  const std::string out = canonical_dump(doc);
  EXPECT_NE(out.find("0.500000000000"), std::string::npos);
  EXPECT_LT(out.find("\"a\""), out.find("\"b\""));
  EXPECT_LT(out.find("\"y\""), out.find("\"z\""));
  EXPECT_EQ(canonical_dump(nlohmann::json::parse(out)), out);
}

}  // namespace
}  // namespace mlfsic
