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

#ifndef MLFSIC_MODEL_HPP_
#define MLFSIC_MODEL_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mlfsic/dataset.hpp"
#include "mlfsic/episode.hpp"

namespace mlfsic {

struct ModelConfig {
  Eigen::Index channels = 0;    // n
  Eigen::Index word_dim = 0;    // d_w
  Eigen::Index joint_dim = 512; // d_j
  Eigen::Index heads = 8;       // n_a
  Eigen::Index hidden_dim = 0;  // d_h; 0 means d_j
  double lambda = 10.0;
  double dropout = 0.1;

  Eigen::Index head_dim() const { return joint_dim / heads; }
  Eigen::Index mlp_hidden() const { return hidden_dim > 0 ? hidden_dim : joint_dim; }
  // Throws ConfigError naming the offending field.
  void validate() const;
};

struct ModelParameters {
  ModelConfig config;
  Eigen::MatrixXd visual_proj;             // d_j x n
  Eigen::MatrixXd text_proj;               // d_j x d_w
  std::vector<Eigen::MatrixXd> query_proj; // per head, d_a x d_j
  std::vector<Eigen::MatrixXd> key_proj;
  std::vector<Eigen::MatrixXd> value_proj;
  Eigen::MatrixXd mlp_w1;                  // d_h x d_j
  Eigen::VectorXd mlp_b1;
  Eigen::MatrixXd mlp_w2;                  // d_j x d_h
  Eigen::VectorXd mlp_b2;
};

// Matrices uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
ModelParameters init_parameters(const ModelConfig& config, std::uint64_t seed);

// Same shapes as `like`, every entry zero.
ModelParameters zeros_like(const ModelParameters& like);

// Flat, named views over every trainable tensor in a fixed order.
struct TensorView {
  std::string name;
  Eigen::Map<Eigen::VectorXd> values;
};
struct ConstTensorView {
  std::string name;
  Eigen::Map<const Eigen::VectorXd> values;
};
std::vector<TensorView> tensor_views(ModelParameters& params);
std::vector<ConstTensorView> tensor_views(const ModelParameters& params);

bool is_text_or_visual(std::string_view tensor_name);

struct ImageEmbedding {
  Eigen::VectorXd global;  // A_visual * pooled features
  Eigen::MatrixXd locals;  // A_visual * each spatial column, d_j x (h*w)
};

ImageEmbedding embed_image(const ModelParameters& params, const FeatureMap& image);
ImageEmbedding embed_image(const ModelParameters& params,
                           const Eigen::MatrixXd& local_features);

Eigen::VectorXd embed_label(const ModelParameters& params,
                            const Eigen::VectorXd& word_vector);

// lambda * cos(global, label)
double cmw_score(const ModelParameters& params, const Eigen::VectorXd& global,
                 const Eigen::VectorXd& label_embedding);

// Dropout after the GeLU of the prototype MLP. Disabled dropout makes every
// forward pass a pure function of its inputs.
struct DropoutSpec {
  bool enabled = false;
  std::uint64_t seed = 0;

  static DropoutSpec off() { return {}; }
};

struct AttentionHeadTrace {
  Eigen::VectorXd query;    // d_a
  Eigen::MatrixXd keys;     // d_a x l
  Eigen::MatrixXd values;   // d_a x l
  Eigen::VectorXd weights;  // l, sums to one
  Eigen::VectorXd output;   // d_a
};

struct AttentionTrace {
  std::vector<AttentionHeadTrace> heads;
  Eigen::VectorXd concat;      // d_j
  Eigen::VectorXd hidden_pre;  // W1 x + b1
  Eigen::VectorXd dropout_mask;  // scaled keep mask, ones when disabled
  Eigen::VectorXd hidden;      // gelu(hidden_pre) .* mask
  Eigen::VectorXd prototype;   // d_j
};

// Multi-head attention over `locals` (d_j x l) with the projected label
// embedding as query, followed by the two-layer GeLU MLP.
AttentionTrace attention_prototype(const ModelParameters& params,
                                   const Eigen::VectorXd& label_embedding,
                                   const Eigen::MatrixXd& locals,
                                   const DropoutSpec& dropout,
                                   std::string_view label = {});

enum class PrototypeVariant {
  kFull,            // attention over the h*w*m support locals
  kSimpleGlobal,    // softmax(lambda*cos) weighted mean of support globals
  kAttentionGlobal, // attention with the m support globals as locals
  kSimpleLocal,     // softmax(lambda*cos) weighted mean of support locals
};

std::string_view to_string(PrototypeVariant variant);
PrototypeVariant prototype_variant_from_string(std::string_view name);

// Where one pooled column came from: a spatial cell of a support image or
// that image's global vector (cell == -1).
struct PooledSource {
  int support_index;
  int cell;
};

struct LabelPrototype {
  std::string label;
  Eigen::VectorXd label_embedding;   // A_text w_c
  Eigen::MatrixXd pooled;            // d_j x l inputs the prototype pooled
  std::vector<PooledSource> sources;
  std::optional<AttentionTrace> attention;  // attention variants only
  Eigen::VectorXd simple_weights;           // simple variants only
  Eigen::VectorXd prototype;
};

struct PrototypeSet {
  PrototypeVariant variant = PrototypeVariant::kFull;
  std::vector<LabelPrototype> labels;
  Eigen::MatrixXd matrix() const;  // d_j x |C|
};

// Per-label support images are gathered in support-list order; locals are
// enumerated row-major inside each image.
PrototypeSet build_prototypes(const ModelParameters& params, const Episode& episode,
                              const Eigen::MatrixXd& label_vectors,
                              PrototypeVariant variant, const DropoutSpec& dropout);

// Same, reusing embeddings of the support images already computed.
PrototypeSet build_prototypes(const ModelParameters& params, const Episode& episode,
                              const std::vector<ImageEmbedding>& support,
                              const Eigen::MatrixXd& label_embeddings,
                              PrototypeVariant variant, const DropoutSpec& dropout);

// lambda * cos(global, prototype)
double score_query(const ModelParameters& params, const Eigen::VectorXd& global,
                   const Eigen::VectorXd& prototype);

// Sum of the k largest lambda * cos(local_i, prototype) over query locals.
double query_local_topk_score(const ModelParameters& params,
                              const Eigen::MatrixXd& locals,
                              const Eigen::VectorXd& prototype, int k);

}  // namespace mlfsic

#endif  // MLFSIC_MODEL_HPP_
