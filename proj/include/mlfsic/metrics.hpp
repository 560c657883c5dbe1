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

#ifndef MLFSIC_METRICS_HPP_
#define MLFSIC_METRICS_HPP_

#include <Eigen/Dense>

#include <optional>
#include <span>

namespace mlfsic {

// Raw scores q (images x labels) and the matching 0/1 truth.
struct PredictionBatch {
  Eigen::MatrixXd scores;
  Eigen::MatrixXd truth;
};

struct ConfusionCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;
};

struct ThresholdBlock {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ThresholdMetrics {
  ThresholdBlock micro;
  ThresholdBlock macro;
  int skipped_labels = 0;  // labels without positives, left out of macro
};

// A cell is predicted positive iff sigmoid(score) > 0.5, i.e. score > 0.
// Empty prediction (truth) sets give precision (recall) 0; F1 is the harmonic
// mean of the block's own precision and recall, 0 when both are 0.
ThresholdMetrics threshold_metrics(const PredictionBatch& batch);

ConfusionCounts confusion(const PredictionBatch& batch);
ConfusionCounts confusion(const PredictionBatch& batch, Eigen::Index label);

// Non-interpolated AP: stable descending sort, mean of precision@k over the
// positive ranks. nullopt when there is no positive.
std::optional<double> average_precision(std::span<const double> scores,
                                        std::span<const double> truth);

struct ApMetrics {
  double micro = 0.0;
  double macro = 0.0;
  int skipped_labels = 0;
};

// Micro pools every cell into one ranking (row-major order for ties); macro
// averages per-label AP over labels with a positive. Throws EvaluationError
// when no label has a positive.
ApMetrics aggregate_ap(const PredictionBatch& batch);

struct MetricBlock {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double ap = 0.0;
};

struct BatchMetrics {
  MetricBlock micro;
  MetricBlock macro;
  int skipped_labels = 0;
};

BatchMetrics batch_metrics(const PredictionBatch& batch);

}  // namespace mlfsic

#endif  // MLFSIC_METRICS_HPP_
