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

#ifndef MLFSIC_EVALUATION_HPP_
#define MLFSIC_EVALUATION_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mlfsic/metrics.hpp"
#include "mlfsic/model.hpp"
#include "mlfsic/training.hpp"

namespace mlfsic {

enum class ApPooling {
  kEpisode,  // metrics per episode, then the arithmetic mean
  kGlobal,   // every episode's cells concatenated into one batch
};

struct EvalOptions {
  int episodes = 200;
  int queries_per_label = 4;
  std::uint64_t seed = 0;
  PrototypeVariant variant = PrototypeVariant::kFull;
  bool finetune = false;
  int finetune_epochs = 40;
  double finetune_lr = 1e-3;
  int topk = 0;  // > 0 scores query locals with the top-k sum
  ApPooling pooling = ApPooling::kEpisode;
};

struct EvalReport {
  BatchMetrics mean;
  BatchMetrics stddev;
  std::vector<BatchMetrics> episodes;
  bool finetune = false;
  ApPooling pooling = ApPooling::kEpisode;
  PrototypeVariant variant = PrototypeVariant::kFull;
  int topk = 0;
  int skipped_labels = 0;
};

// Scores every query of an episode against every episode label.
PredictionBatch predict_episode(const ModelParameters& params, const Episode& episode,
                                const Eigen::MatrixXd& label_vectors,
                                PrototypeVariant variant, int topk);

EvalReport evaluate(const ModelParameters& params, const EpisodeSource& source,
                    const EvalOptions& options);

// Sorted keys, fixed 12-decimal numbers; byte-identical for equal reports.
std::string report_json(const EvalReport& report, const std::string& config_text);
std::string report_episodes_csv(const EvalReport& report);

}  // namespace mlfsic

#endif  // MLFSIC_EVALUATION_HPP_
