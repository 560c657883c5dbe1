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

#ifndef MLFSIC_TRAINING_HPP_
#define MLFSIC_TRAINING_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mlfsic/dataset.hpp"
#include "mlfsic/episode.hpp"
#include "mlfsic/model.hpp"
#include "mlfsic/word_embeddings.hpp"

namespace mlfsic {

struct TrainingConfig {
  int epochs = 200;
  int warmup_epochs = 10;
  double base_lr = 1e-3;
  int episodes_per_epoch = 100;
  int queries_per_label = 4;
  double gamma = 1.0;
  std::uint64_t seed = 0;
  int finetune_epochs = 40;
  PrototypeVariant variant = PrototypeVariant::kFull;
  bool dropout = true;

  void validate() const;
};

// Linear ramp base_lr*(e+1)/warmup_epochs during warm-up, base_lr after.
double learning_rate(const TrainingConfig& config, int epoch);

struct LossReport {
  double cmw = 0.0;
  double query = 0.0;
  double total = 0.0;
  Eigen::MatrixXd cmw_terms;    // |S| x |C|
  Eigen::MatrixXd query_terms;  // |Q| x |C|
};

struct LossOptions {
  double gamma = 1.0;
  bool include_query = true;
  PrototypeVariant variant = PrototypeVariant::kFull;
  DropoutSpec dropout;
};

// Sum over support images and labels of BCE(lambda*cos(g, A_text w_c), y).
double cmw_loss(const ModelParameters& params, const Episode& episode,
                const Eigen::MatrixXd& label_vectors);

// Sum over query images and labels of BCE(lambda*cos(g, p_c), y).
double query_loss(const ModelParameters& params, const Episode& episode,
                  const PrototypeSet& prototypes);

// Forward pass only: L_all = L_cmw + gamma * L_query.
LossReport episode_loss(const ModelParameters& params, const Episode& episode,
                        const Eigen::MatrixXd& label_vectors,
                        const LossOptions& options);

struct GradientResult {
  LossReport loss;
  ModelParameters gradients;
};

// Exact reverse-mode gradient of L_all for every trainable tensor. Throws
// NumericalFaultError naming the first non-finite tensor.
GradientResult compute_gradients(const ModelParameters& params,
                                 const Episode& episode,
                                 const Eigen::MatrixXd& label_vectors,
                                 const LossOptions& options);

// Images and label vocabulary one training split draws episodes from.
struct EpisodeSource {
  std::span<const FeatureMap> images;
  std::vector<std::string> labels;
  Eigen::MatrixXd label_vectors;  // d_w x |labels|
};

EpisodeSource make_episode_source(std::span<const FeatureMap> images,
                                  std::vector<std::string> labels,
                                  const WordEmbeddingTable& embeddings);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double cmw = 0.0;
  double query = 0.0;
  double total = 0.0;
};

struct TrainingResult {
  ModelParameters params;
  std::vector<EpochRecord> curve;
  std::string rng_state;
};

// One Adam step on L_all per sampled episode.
TrainingResult train(ModelParameters params, const EpisodeSource& source,
                     const TrainingConfig& config);

// Adam on L_cmw over the episode's support set, touching only the visual and
// text projections. Returns an adapted copy.
ModelParameters finetune_on_support(const ModelParameters& params,
                                    const Episode& episode,
                                    const Eigen::MatrixXd& label_vectors,
                                    int epochs, double lr);

std::string loss_curve_csv(std::span<const EpochRecord> curve);

}  // namespace mlfsic

#endif  // MLFSIC_TRAINING_HPP_
