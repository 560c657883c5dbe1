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

#include "mlfsic/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "mlfsic/errors.hpp"

namespace mlfsic {
namespace {

double ratio(long num, long den) {
  return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

void check(const PredictionBatch& batch) {
  if (batch.scores.rows() != batch.truth.rows() || batch.scores.cols() != batch.truth.cols()) {
    throw DimensionError("prediction batch: scores and truth differ in shape");
  }
}

void count(ConfusionCounts& c, double score, double truth) {
  const bool predicted = score > 0.0;
  const bool positive = truth > 0.5;
  if (predicted && positive) ++c.tp;
  else if (predicted) ++c.fp;
  else if (positive) ++c.fn;
  else ++c.tn;
}

}  // namespace

ConfusionCounts confusion(const PredictionBatch& batch) {
  check(batch);
  ConfusionCounts c;
  for (Eigen::Index i = 0; i < batch.scores.rows(); ++i) {
    for (Eigen::Index j = 0; j < batch.scores.cols(); ++j) {
      count(c, batch.scores(i, j), batch.truth(i, j));
    }
  }
  return c;
}

ConfusionCounts confusion(const PredictionBatch& batch, Eigen::Index label) {
  check(batch);
  ConfusionCounts c;
  for (Eigen::Index i = 0; i < batch.scores.rows(); ++i) {
    count(c, batch.scores(i, label), batch.truth(i, label));
  }
  return c;
}

ThresholdMetrics threshold_metrics(const PredictionBatch& batch) {
  ThresholdMetrics m;
  const ConfusionCounts all = confusion(batch);
  m.micro.precision = ratio(all.tp, all.tp + all.fp);
  m.micro.recall = ratio(all.tp, all.tp + all.fn);
  m.micro.f1 = harmonic(m.micro.precision, m.micro.recall);

  int used = 0;
  for (Eigen::Index j = 0; j < batch.scores.cols(); ++j) {
    const ConfusionCounts c = confusion(batch, j);
    if (c.tp + c.fn == 0) {
      ++m.skipped_labels;
      continue;
    }
    m.macro.precision += ratio(c.tp, c.tp + c.fp);
    m.macro.recall += ratio(c.tp, c.tp + c.fn);
    ++used;
  }
  if (used > 0) {
    m.macro.precision /= used;
    m.macro.recall /= used;
  }
  m.macro.f1 = harmonic(m.macro.precision, m.macro.recall);
  return m;
}

std::optional<double> average_precision(std::span<const double> scores,
                                        std::span<const double> truth) {
  if (scores.size() != truth.size()) {
    throw DimensionError("average_precision: scores and truth differ in length");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  long hits = 0;
  double sum = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (truth[order[rank]] > 0.5) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0) return std::nullopt;
  return sum / static_cast<double>(hits);
}

ApMetrics aggregate_ap(const PredictionBatch& batch) {
  check(batch);
  const auto rows = batch.scores.rows();
  const auto cols = batch.scores.cols();
  std::vector<double> s, t;
  s.reserve(static_cast<std::size_t>(rows * cols));
  t.reserve(s.capacity());
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      s.push_back(batch.scores(i, j));
      t.push_back(batch.truth(i, j));
    }
  }
  ApMetrics m;
  const auto micro = average_precision(s, t);
  if (!micro) throw EvaluationError("aggregate_ap: no label has a positive");
  m.micro = *micro;

  int used = 0;
  std::vector<double> col_s(static_cast<std::size_t>(rows)), col_t(static_cast<std::size_t>(rows));
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      col_s[static_cast<std::size_t>(i)] = batch.scores(i, j);
      col_t[static_cast<std::size_t>(i)] = batch.truth(i, j);
    }
    if (const auto ap = average_precision(col_s, col_t)) {
      m.macro += *ap;
      ++used;
    } else {
      ++m.skipped_labels;
    }
  }
  m.macro /= used;
  return m;
}

BatchMetrics batch_metrics(const PredictionBatch& batch) {
  const ThresholdMetrics th = threshold_metrics(batch);
  const ApMetrics ap = aggregate_ap(batch);
  BatchMetrics m;
  m.micro = {th.micro.precision, th.micro.recall, th.micro.f1, ap.micro};
  m.macro = {th.macro.precision, th.macro.recall, th.macro.f1, ap.macro};
  m.skipped_labels = ap.skipped_labels;
  return m;
}

}  // namespace mlfsic
