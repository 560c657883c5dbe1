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

#include "mlfsic/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "mlfsic/core_math.hpp"
#include "mlfsic/errors.hpp"

namespace mlfsic {

void ModelConfig::validate() const {
  if (channels < 1) throw ConfigError("channels: must be positive");
  if (word_dim < 1) throw ConfigError("word_dim: must be positive");
  if (joint_dim < 1) throw ConfigError("dj: must be positive");
  if (heads < 1) throw ConfigError("heads: must be positive");
  if (joint_dim % heads != 0) {
    throw ConfigError("heads: dj=" + std::to_string(joint_dim) +
                      " is not divisible by heads=" + std::to_string(heads));
  }
  if (hidden_dim < 0) throw ConfigError("hidden: must be >= 0");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda: must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout: must lie in [0, 1)");
}

namespace {

Eigen::MatrixXd uniform_fan_in(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  std::uniform_real_distribution<double> u(-bound, bound);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  }
  return m;
}

}  // namespace

ModelParameters init_parameters(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const auto dj = config.joint_dim;
  const auto da = config.head_dim();
  const auto dh = config.mlp_hidden();
  ModelParameters p;
  p.config = config;
  p.visual_proj = uniform_fan_in(dj, config.channels, rng);
  p.text_proj = uniform_fan_in(dj, config.word_dim, rng);
  for (Eigen::Index j = 0; j < config.heads; ++j) {
    p.query_proj.push_back(uniform_fan_in(da, dj, rng));
    p.key_proj.push_back(uniform_fan_in(da, dj, rng));
    p.value_proj.push_back(uniform_fan_in(da, dj, rng));
  }
  p.mlp_w1 = uniform_fan_in(dh, dj, rng);
  p.mlp_b1 = Eigen::VectorXd::Zero(dh);
  p.mlp_w2 = uniform_fan_in(dj, dh, rng);
  p.mlp_b2 = Eigen::VectorXd::Zero(dj);
  return p;
}

ModelParameters zeros_like(const ModelParameters& like) {
  ModelParameters z = like;
  for (auto& view : tensor_views(z)) view.values.setZero();
  return z;
}

namespace {

template <typename View, typename Params>
std::vector<View> views_of(Params& p) {
  std::vector<View> out;
  auto add = [&](const std::string& name, auto& tensor) {
    out.push_back(View{name, {tensor.data(), tensor.size()}});
  };
  add("visual_proj", p.visual_proj);
  add("text_proj", p.text_proj);
  for (std::size_t j = 0; j < p.query_proj.size(); ++j) {
    add("query_proj[" + std::to_string(j) + "]", p.query_proj[j]);
  }
  for (std::size_t j = 0; j < p.key_proj.size(); ++j) {
    add("key_proj[" + std::to_string(j) + "]", p.key_proj[j]);
  }
  for (std::size_t j = 0; j < p.value_proj.size(); ++j) {
    add("value_proj[" + std::to_string(j) + "]", p.value_proj[j]);
  }
  add("mlp_w1", p.mlp_w1);
  add("mlp_b1", p.mlp_b1);
  add("mlp_w2", p.mlp_w2);
  add("mlp_b2", p.mlp_b2);
  return out;
}

}  // namespace

std::vector<TensorView> tensor_views(ModelParameters& params) {
  return views_of<TensorView>(params);
}

std::vector<ConstTensorView> tensor_views(const ModelParameters& params) {
  return views_of<ConstTensorView>(params);
}

bool is_text_or_visual(std::string_view tensor_name) {
  return tensor_name == "visual_proj" || tensor_name == "text_proj";
}

ImageEmbedding embed_image(const ModelParameters& params,
                           const Eigen::MatrixXd& local_features) {
  if (local_features.rows() != params.visual_proj.cols()) {
    throw DimensionError("embed_image: feature map has " +
                         std::to_string(local_features.rows()) + " channels, model expects " +
                         std::to_string(params.visual_proj.cols()));
  }
  ImageEmbedding e;
  e.global = params.visual_proj * adaptive_avg_pool(local_features);
  e.locals = params.visual_proj * local_features;
  return e;
}

ImageEmbedding embed_image(const ModelParameters& params, const FeatureMap& image) {
  return embed_image(params, image.local);
}

Eigen::VectorXd embed_label(const ModelParameters& params,
                            const Eigen::VectorXd& word_vector) {
  if (word_vector.size() != params.text_proj.cols()) {
    throw DimensionError("embed_label: word vector has length " +
                         std::to_string(word_vector.size()) + ", model expects " +
                         std::to_string(params.text_proj.cols()));
  }
  return params.text_proj * word_vector;
}

double cmw_score(const ModelParameters& params, const Eigen::VectorXd& global,
                 const Eigen::VectorXd& label_embedding) {
  return params.config.lambda * cosine_sim(global, label_embedding);
}

AttentionTrace attention_prototype(const ModelParameters& params,
                                   const Eigen::VectorXd& label_embedding,
                                   const Eigen::MatrixXd& locals,
                                   const DropoutSpec& dropout, std::string_view label) {
  if (locals.cols() == 0) {
    throw NoSupportError(std::string(label));
  }
  const auto& cfg = params.config;
  const auto da = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(da));
  AttentionTrace t;
  t.concat.resize(cfg.joint_dim);
  t.heads.reserve(static_cast<std::size_t>(cfg.heads));
  for (Eigen::Index j = 0; j < cfg.heads; ++j) {
    const auto hj = static_cast<std::size_t>(j);
    AttentionHeadTrace h;
    h.query = params.query_proj[hj] * label_embedding;
    h.keys = params.key_proj[hj] * locals;
    h.values = params.value_proj[hj] * locals;
    h.weights = softmax((h.keys.transpose() * h.query) * scale);
    h.output = h.values * h.weights;
    t.concat.segment(j * da, da) = h.output;
    t.heads.push_back(std::move(h));
  }
  t.hidden_pre = params.mlp_w1 * t.concat + params.mlp_b1;
  t.dropout_mask = Eigen::VectorXd::Ones(t.hidden_pre.size());
  if (dropout.enabled && cfg.dropout > 0.0) {
    std::mt19937_64 rng(dropout.seed);
    std::bernoulli_distribution keep(1.0 - cfg.dropout);
    for (Eigen::Index i = 0; i < t.dropout_mask.size(); ++i) {
      t.dropout_mask[i] = keep(rng) ? 1.0 / (1.0 - cfg.dropout) : 0.0;
    }
  }
  t.hidden = gelu(t.hidden_pre).cwiseProduct(t.dropout_mask);
  t.prototype = params.mlp_w2 * t.hidden + params.mlp_b2;
  return t;
}

std::string_view to_string(PrototypeVariant variant) {
  switch (variant) {
    case PrototypeVariant::kFull:
      return "full";
    case PrototypeVariant::kSimpleGlobal:
      return "simple_global";
    case PrototypeVariant::kAttentionGlobal:
      return "attn_global";
    case PrototypeVariant::kSimpleLocal:
      return "simple_local";
  }
  return "?";
}

PrototypeVariant prototype_variant_from_string(std::string_view name) {
  for (auto v : {PrototypeVariant::kFull, PrototypeVariant::kSimpleGlobal,
                 PrototypeVariant::kAttentionGlobal, PrototypeVariant::kSimpleLocal}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("variant: unknown prototype variant '" + std::string(name) + "'");
}

Eigen::MatrixXd PrototypeSet::matrix() const {
  if (labels.empty()) return {};
  Eigen::MatrixXd m(labels.front().prototype.size(), static_cast<Eigen::Index>(labels.size()));
  for (std::size_t c = 0; c < labels.size(); ++c) {
    m.col(static_cast<Eigen::Index>(c)) = labels[c].prototype;
  }
  return m;
}

namespace {

std::uint64_t label_seed(std::uint64_t base, std::size_t label_index) {
  // splitmix64 step so neighbouring labels get unrelated dropout streams.
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (label_index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

bool uses_locals(PrototypeVariant v) {
  return v == PrototypeVariant::kFull || v == PrototypeVariant::kSimpleLocal;
}

bool uses_attention(PrototypeVariant v) {
  return v == PrototypeVariant::kFull || v == PrototypeVariant::kAttentionGlobal;
}

}  // namespace

PrototypeSet build_prototypes(const ModelParameters& params, const Episode& episode,
                              const std::vector<ImageEmbedding>& support,
                              const Eigen::MatrixXd& label_embeddings,
                              PrototypeVariant variant, const DropoutSpec& dropout) {
  PrototypeSet set;
  set.variant = variant;
  const double lambda = params.config.lambda;
  for (std::size_t c = 0; c < episode.labels.size(); ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    LabelPrototype lp;
    lp.label = episode.labels[c];
    lp.label_embedding = label_embeddings.col(col);

    std::vector<int> members;
    for (Eigen::Index i = 0; i < episode.support_truth.rows(); ++i) {
      if (episode.support_truth(i, col) > 0.5) members.push_back(static_cast<int>(i));
    }
    if (members.empty()) throw NoSupportError(lp.label);

    Eigen::Index width = 0;
    for (int i : members) {
      width += uses_locals(variant) ? support[static_cast<std::size_t>(i)].locals.cols() : 1;
    }
    lp.pooled.resize(params.config.joint_dim, width);
    Eigen::Index at = 0;
    for (int i : members) {
      const auto& emb = support[static_cast<std::size_t>(i)];
      if (uses_locals(variant)) {
        lp.pooled.middleCols(at, emb.locals.cols()) = emb.locals;
        for (Eigen::Index cell = 0; cell < emb.locals.cols(); ++cell) {
          lp.sources.push_back({i, static_cast<int>(cell)});
        }
        at += emb.locals.cols();
      } else {
        lp.pooled.col(at++) = emb.global;
        lp.sources.push_back({i, -1});
      }
    }

    if (uses_attention(variant)) {
      DropoutSpec label_dropout = dropout;
      label_dropout.seed = label_seed(dropout.seed, c);
      lp.attention = attention_prototype(params, lp.label_embedding, lp.pooled,
                                         label_dropout, lp.label);
      lp.prototype = lp.attention->prototype;
    } else {
      Eigen::VectorXd logits(lp.pooled.cols());
      for (Eigen::Index k = 0; k < lp.pooled.cols(); ++k) {
        logits[k] = lambda * cosine_sim(lp.label_embedding, lp.pooled.col(k));
      }
      lp.simple_weights = softmax(logits);
      lp.prototype = lp.pooled * lp.simple_weights;
    }
    set.labels.push_back(std::move(lp));
  }
  return set;
}

PrototypeSet build_prototypes(const ModelParameters& params, const Episode& episode,
                              const Eigen::MatrixXd& label_vectors,
                              PrototypeVariant variant, const DropoutSpec& dropout) {
  std::vector<ImageEmbedding> support;
  support.reserve(episode.support.size());
  for (const FeatureMap* img : episode.support) support.push_back(embed_image(params, *img));
  if (label_vectors.cols() != static_cast<Eigen::Index>(episode.labels.size())) {
    throw DimensionError("build_prototypes: one label vector per episode label required");
  }
  if (label_vectors.rows() != params.text_proj.cols()) {
    throw DimensionError("build_prototypes: label vector length mismatch");
  }
  const Eigen::MatrixXd label_embeddings = params.text_proj * label_vectors;
  return build_prototypes(params, episode, support, label_embeddings, variant, dropout);
}

double score_query(const ModelParameters& params, const Eigen::VectorXd& global,
                   const Eigen::VectorXd& prototype) {
  return params.config.lambda * cosine_sim(global, prototype);
}

double query_local_topk_score(const ModelParameters& params, const Eigen::MatrixXd& locals,
                              const Eigen::VectorXd& prototype, int k) {
  if (k < 1) throw ConfigError("topk: k must be at least 1");
  if (k > locals.cols()) {
    throw DimensionError("query_local_topk_score: k=" + std::to_string(k) + " exceeds " +
                         std::to_string(locals.cols()) + " query locals");
  }
  std::vector<double> scores(static_cast<std::size_t>(locals.cols()));
  for (Eigen::Index i = 0; i < locals.cols(); ++i) {
    scores[static_cast<std::size_t>(i)] = params.config.lambda * cosine_sim(locals.col(i), prototype);
  }
  std::partial_sort(scores.begin(), scores.begin() + k, scores.end(), std::greater<>());
  double sum = 0.0;
  for (int i = 0; i < k; ++i) sum += scores[static_cast<std::size_t>(i)];
  return sum;
}

}  // namespace mlfsic
