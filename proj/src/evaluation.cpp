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

#include "mlfsic/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "mlfsic/canonical_json.hpp"
#include "mlfsic/errors.hpp"

namespace mlfsic {

PredictionBatch predict_episode(const ModelParameters& params, const Episode& episode,
                                const Eigen::MatrixXd& label_vectors,
                                PrototypeVariant variant, int topk) {
  const PrototypeSet protos =
      build_prototypes(params, episode, label_vectors, variant, DropoutSpec::off());
  PredictionBatch batch;
  batch.truth = episode.query_truth;
  batch.scores.resize(episode.query_truth.rows(), episode.query_truth.cols());
  for (std::size_t q = 0; q < episode.query.size(); ++q) {
    const ImageEmbedding emb = embed_image(params, *episode.query[q]);
    for (std::size_t c = 0; c < protos.labels.size(); ++c) {
      const auto& p = protos.labels[c].prototype;
      batch.scores(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(c)) =
          topk > 0 ? query_local_topk_score(params, emb.locals, p, topk)
                   : score_query(params, emb.global, p);
    }
  }
  return batch;
}

namespace {

template <typename F>
void for_each_metric(BatchMetrics& m, F f) {
  for (MetricBlock* b : {&m.micro, &m.macro}) {
    f(b->precision);
    f(b->recall);
    f(b->f1);
    f(b->ap);
  }
}

template <typename F>
void zip_metrics(BatchMetrics& a, const BatchMetrics& b, F f) {
  const MetricBlock* bb[] = {&b.micro, &b.macro};
  MetricBlock* ab[] = {&a.micro, &a.macro};
  for (int k = 0; k < 2; ++k) {
    f(ab[k]->precision, bb[k]->precision);
    f(ab[k]->recall, bb[k]->recall);
    f(ab[k]->f1, bb[k]->f1);
    f(ab[k]->ap, bb[k]->ap);
  }
}

}  // namespace

EvalReport evaluate(const ModelParameters& params, const EpisodeSource& source,
                    const EvalOptions& options) {
  if (options.episodes < 1) throw ConfigError("eval_episodes: must be positive");
  EvalReport report;
  report.finetune = options.finetune;
  report.pooling = options.pooling;
  report.variant = options.variant;
  report.topk = options.topk;

  std::mt19937_64 rng(options.seed);
  PredictionBatch pooled;
  for (int e = 0; e < options.episodes; ++e) {
    const std::uint64_t seed = rng();
    Episode episode;
    PredictionBatch batch;
    try {
      episode = sample_episode(source.images, source.labels, options.queries_per_label, seed);
      if (options.finetune) {
        const ModelParameters adapted = finetune_on_support(
            params, episode, source.label_vectors, options.finetune_epochs, options.finetune_lr);
        batch = predict_episode(adapted, episode, source.label_vectors, options.variant,
                                options.topk);
      } else {
        batch = predict_episode(params, episode, source.label_vectors, options.variant,
                                options.topk);
      }
      report.episodes.push_back(batch_metrics(batch));
    } catch (const Error& err) {
      throw EvaluationError("episode " + std::to_string(e) + ": " + err.what());
    }
    report.skipped_labels += report.episodes.back().skipped_labels;
    if (options.pooling == ApPooling::kGlobal) {
      const auto rows = pooled.scores.rows();
      pooled.scores.conservativeResize(rows + batch.scores.rows(), batch.scores.cols());
      pooled.truth.conservativeResize(rows + batch.truth.rows(), batch.truth.cols());
      pooled.scores.bottomRows(batch.scores.rows()) = batch.scores;
      pooled.truth.bottomRows(batch.truth.rows()) = batch.truth;
    }
  }

  const double n = static_cast<double>(report.episodes.size());
  for (const auto& m : report.episodes) {
    zip_metrics(report.mean, m, [&](double& acc, double v) { acc += v; });
  }
  for_each_metric(report.mean, [&](double& v) { v /= n; });
  for (const auto& m : report.episodes) {
    BatchMetrics dev = m;
    zip_metrics(dev, report.mean, [](double& d, double mu) { d = (d - mu) * (d - mu); });
    zip_metrics(report.stddev, dev, [](double& acc, double v) { acc += v; });
  }
  for_each_metric(report.stddev, [&](double& v) { v = std::sqrt(v / n); });
  if (options.pooling == ApPooling::kGlobal) {
    report.mean = batch_metrics(pooled);
    report.skipped_labels = report.mean.skipped_labels;
  } else {
    report.mean.skipped_labels = report.skipped_labels;
  }
  return report;
}

namespace {

nlohmann::json block_json(const MetricBlock& b) {
  return {{"precision", b.precision}, {"recall", b.recall}, {"f1", b.f1}, {"ap", b.ap}};
}

nlohmann::json config_json(const std::string& text) {
  nlohmann::json out = nlohmann::json::object();
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

}  // namespace

std::string report_json(const EvalReport& report, const std::string& config_text) {
  nlohmann::json per_episode = nlohmann::json::array();
  for (const auto& m : report.episodes) {
    per_episode.push_back({{"micro", block_json(m.micro)},
                           {"macro", block_json(m.macro)},
                           {"skipped_labels", m.skipped_labels}});
  }
  nlohmann::json doc = {
      {"config", config_json(config_text)},
      {"episodes", static_cast<int>(report.episodes.size())},
      {"finetune", report.finetune},
      {"ap_pooling", report.pooling == ApPooling::kEpisode ? "episode" : "global"},
      {"variant", std::string(to_string(report.variant))},
      {"topk", report.topk},
      {"micro", block_json(report.mean.micro)},
      {"macro", block_json(report.mean.macro)},
      {"micro_std", block_json(report.stddev.micro)},
      {"macro_std", block_json(report.stddev.macro)},
      {"skipped_labels", report.skipped_labels},
      {"per_episode", per_episode},
  };
  return canonical_dump(doc);
}

std::string report_episodes_csv(const EvalReport& report) {
  std::string out =
      "episode,micro_precision,micro_recall,micro_f1,micro_ap,"
      "macro_precision,macro_recall,macro_f1,macro_ap\n";
  char buf[256];
  for (std::size_t e = 0; e < report.episodes.size(); ++e) {
    const auto& m = report.episodes[e];
    std::snprintf(buf, sizeof buf, "%zu,%.12f,%.12f,%.12f,%.12f,%.12f,%.12f,%.12f,%.12f\n", e,
                  m.micro.precision, m.micro.recall, m.micro.f1, m.micro.ap, m.macro.precision,
                  m.macro.recall, m.macro.f1, m.macro.ap);
    out += buf;
  }
  return out;
}

}  // namespace mlfsic
