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

#include "mlfsic/training.hpp"

#include <cstdio>
#include <random>
#include <sstream>

#include "mlfsic/adam.hpp"
#include "mlfsic/errors.hpp"

namespace mlfsic {

void TrainingConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs: must be >= 0");
  if (warmup_epochs < 0) throw ConfigError("warmup: must be >= 0");
  // Nothing is scheduled when epochs == 0.
  if (epochs > 0 && warmup_epochs > epochs) throw ConfigError("warmup: exceeds epochs");
  if (!(base_lr > 0.0)) throw ConfigError("lr: must be positive");
  if (episodes_per_epoch < 1) throw ConfigError("episodes_per_epoch: must be positive");
  if (queries_per_label < 0) throw ConfigError("queries_per_label: must be >= 0");
  if (!(gamma >= 0.0)) throw ConfigError("gamma: must be >= 0");
  if (finetune_epochs < 0) throw ConfigError("finetune_epochs: must be >= 0");
}

double learning_rate(const TrainingConfig& config, int epoch) {
  if (epoch < config.warmup_epochs) {
    return config.base_lr * static_cast<double>(epoch + 1) /
           static_cast<double>(config.warmup_epochs);
  }
  return config.base_lr;
}

EpisodeSource make_episode_source(std::span<const FeatureMap> images,
                                  std::vector<std::string> labels,
                                  const WordEmbeddingTable& embeddings) {
  EpisodeSource source;
  source.images = images;
  source.label_vectors = label_matrix(embeddings, labels);
  source.labels = std::move(labels);
  return source;
}

namespace {

std::vector<AdamState> adam_states(const ModelParameters& params) {
  std::vector<AdamState> states;
  for (const auto& view : tensor_views(params)) {
    states.push_back(AdamState::zeros(view.values.size(), 1));
  }
  return states;
}

}  // namespace

TrainingResult train(ModelParameters params, const EpisodeSource& source,
                     const TrainingConfig& config) {
  config.validate();
  params.config.validate();
  std::mt19937_64 rng(config.seed);
  auto states = adam_states(params);
  TrainingResult result;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = learning_rate(config, epoch);
    EpochRecord record;
    record.epoch = epoch;
    record.lr = lr;
    for (int e = 0; e < config.episodes_per_epoch; ++e) {
      const std::uint64_t episode_seed = rng();
      const std::uint64_t dropout_seed = rng();
      Episode episode;
      try {
        episode = sample_episode(source.images, source.labels, config.queries_per_label,
                                 episode_seed);
      } catch (const SamplingError& err) {
        throw SamplingError("epoch " + std::to_string(epoch) + ", episode " +
                                std::to_string(e) + ": " + err.what(),
                            err.label());
      }
      LossOptions options;
      options.gamma = config.gamma;
      options.variant = config.variant;
      options.dropout = DropoutSpec{config.dropout, dropout_seed};
      const GradientResult g = compute_gradients(params, episode, source.label_vectors, options);

      auto views = tensor_views(params);
      const auto grad_views = tensor_views(g.gradients);
      for (std::size_t k = 0; k < views.size(); ++k) {
        adam_step(views[k].values, grad_views[k].values, states[k], lr);
      }
      record.cmw += g.loss.cmw;
      record.query += g.loss.query;
      record.total += g.loss.total;
    }
    const double n = static_cast<double>(config.episodes_per_epoch);
    record.cmw /= n;
    record.query /= n;
    record.total /= n;
    result.curve.push_back(record);
  }
  std::ostringstream state;
  state << rng;
  result.rng_state = state.str();
  result.params = std::move(params);
  return result;
}

ModelParameters finetune_on_support(const ModelParameters& params, const Episode& episode,
                                    const Eigen::MatrixXd& label_vectors, int epochs,
                                    double lr) {
  if (episode.support.empty()) throw Error("finetune_on_support: empty support set");
  ModelParameters adapted = params;
  AdamState visual = AdamState::zeros(adapted.visual_proj.rows(), adapted.visual_proj.cols());
  AdamState text = AdamState::zeros(adapted.text_proj.rows(), adapted.text_proj.cols());
  LossOptions options;
  options.include_query = false;
  for (int e = 0; e < epochs; ++e) {
    const GradientResult g = compute_gradients(adapted, episode, label_vectors, options);
    adam_step(adapted.visual_proj, g.gradients.visual_proj, visual, lr);
    adam_step(adapted.text_proj, g.gradients.text_proj, text, lr);
  }
  return adapted;
}

std::string loss_curve_csv(std::span<const EpochRecord> curve) {
  std::string out = "epoch,l_cmw,l_query,l_all,lr\n";
  char buf[160];
  for (const auto& r : curve) {
    std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%.12g,%.12g\n", r.epoch, r.cmw, r.query,
                  r.total, r.lr);
    out += buf;
  }
  return out;
}

}  // namespace mlfsic
