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

// Forward and reverse passes of L_all = L_cmw + gamma * L_query.
//
// Notation in the comments below: g is a projected global vector, U the
// pooled d_j x l input of one prototype, w the projected label embedding.

#include <cmath>
#include <utility>

#include "mlfsic/core_math.hpp"
#include "mlfsic/errors.hpp"
#include "mlfsic/training.hpp"

namespace mlfsic {
namespace {

struct AttentionGrad {
  Eigen::VectorXd d_label;   // dL/dw
  Eigen::MatrixXd d_pooled;  // dL/dU
};

AttentionGrad attention_backward(const ModelParameters& params, const LabelPrototype& lp,
                                 const Eigen::VectorXd& d_prototype, ModelParameters& grads) {
  const auto& t = *lp.attention;
  const auto& cfg = params.config;
  const auto da = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(da));
  const Eigen::MatrixXd& U = lp.pooled;

  grads.mlp_w2.noalias() += d_prototype * t.hidden.transpose();
  grads.mlp_b2 += d_prototype;
  const Eigen::VectorXd d_hidden_pre =
      (params.mlp_w2.transpose() * d_prototype)
          .cwiseProduct(t.dropout_mask)
          .cwiseProduct(gelu_derivative(t.hidden_pre));
  grads.mlp_w1.noalias() += d_hidden_pre * t.concat.transpose();
  grads.mlp_b1 += d_hidden_pre;
  const Eigen::VectorXd d_concat = params.mlp_w1.transpose() * d_hidden_pre;

  AttentionGrad out;
  out.d_label = Eigen::VectorXd::Zero(lp.label_embedding.size());
  out.d_pooled = Eigen::MatrixXd::Zero(U.rows(), U.cols());
  for (Eigen::Index j = 0; j < cfg.heads; ++j) {
    const auto hj = static_cast<std::size_t>(j);
    const auto& h = t.heads[hj];
    const Eigen::VectorXd d_out = d_concat.segment(j * da, da);
    // output = values * weights
    const Eigen::MatrixXd d_values = d_out * h.weights.transpose();
    const Eigen::VectorXd d_weights = h.values.transpose() * d_out;
    const Eigen::VectorXd d_logits = softmax_backward(h.weights, d_weights) * scale;
    // logits = keys^T query * scale
    const Eigen::MatrixXd d_keys = h.query * d_logits.transpose();
    const Eigen::VectorXd d_query = h.keys * d_logits;

    grads.value_proj[hj].noalias() += d_values * U.transpose();
    grads.key_proj[hj].noalias() += d_keys * U.transpose();
    grads.query_proj[hj].noalias() += d_query * lp.label_embedding.transpose();
    out.d_pooled.noalias() += params.value_proj[hj].transpose() * d_values;
    out.d_pooled.noalias() += params.key_proj[hj].transpose() * d_keys;
    out.d_label.noalias() += params.query_proj[hj].transpose() * d_query;
  }
  return out;
}

// p = U * softmax(lambda * cos(w, U_k))
AttentionGrad simple_backward(const ModelParameters& params, const LabelPrototype& lp,
                              const Eigen::VectorXd& d_prototype) {
  const double lambda = params.config.lambda;
  const Eigen::MatrixXd& U = lp.pooled;
  AttentionGrad out;
  out.d_pooled = d_prototype * lp.simple_weights.transpose();
  out.d_label = Eigen::VectorXd::Zero(lp.label_embedding.size());
  const Eigen::VectorXd d_weights = U.transpose() * d_prototype;
  const Eigen::VectorXd d_logits = softmax_backward(lp.simple_weights, d_weights);
  for (Eigen::Index k = 0; k < U.cols(); ++k) {
    const auto g = cosine_sim_backward(lp.label_embedding, U.col(k), lambda * d_logits[k]);
    out.d_label += g.du;
    out.d_pooled.col(k) += g.dv;
  }
  return out;
}

void require_finite(const Eigen::MatrixXd& m, const std::string& name) {
  if (!m.allFinite()) throw NumericalFaultError("non-finite values in " + name);
}

// Shared by the loss-only and gradient entry points so L_all is summed on a
// single path. `grads` may be null.
LossReport run_episode(const ModelParameters& params, const Episode& episode,
                       const Eigen::MatrixXd& label_vectors, const LossOptions& options,
                       ModelParameters* grads) {
  const double lambda = params.config.lambda;
  const auto n_labels = static_cast<Eigen::Index>(episode.labels.size());
  if (label_vectors.cols() != n_labels || label_vectors.rows() != params.text_proj.cols()) {
    throw DimensionError("label vectors do not match the episode labels");
  }
  const auto n_support = static_cast<Eigen::Index>(episode.support.size());
  const auto n_query = static_cast<Eigen::Index>(episode.query.size());

  std::vector<ImageEmbedding> support;
  support.reserve(episode.support.size());
  for (const FeatureMap* img : episode.support) support.push_back(embed_image(params, *img));
  const Eigen::MatrixXd label_emb = params.text_proj * label_vectors;
  for (const auto& s : support) require_finite(s.locals, "support embeddings");
  require_finite(label_emb, "label embeddings");

  LossReport report;
  report.cmw_terms = Eigen::MatrixXd::Zero(n_support, n_labels);
  report.query_terms = Eigen::MatrixXd::Zero(n_query, n_labels);

  Eigen::MatrixXd d_label_emb;
  Eigen::MatrixXd d_support_global;
  std::vector<Eigen::MatrixXd> d_support_locals;
  if (grads) {
    d_label_emb = Eigen::MatrixXd::Zero(label_emb.rows(), n_labels);
    d_support_global = Eigen::MatrixXd::Zero(params.config.joint_dim, n_support);
    d_support_locals.reserve(support.size());
    for (const auto& s : support) {
      d_support_locals.push_back(Eigen::MatrixXd::Zero(s.locals.rows(), s.locals.cols()));
    }
  }

  // CMW-loss over the support set.
  for (Eigen::Index i = 0; i < n_support; ++i) {
    const auto& g = support[static_cast<std::size_t>(i)].global;
    for (Eigen::Index c = 0; c < n_labels; ++c) {
      const double y = episode.support_truth(i, c);
      const double s = lambda * cosine_sim(g, label_emb.col(c));
      report.cmw_terms(i, c) = binary_cross_entropy(s, y);
      if (grads) {
        const auto cg = cosine_sim_backward(g, label_emb.col(c),
                                            lambda * binary_cross_entropy_grad(s, y));
        d_support_global.col(i) += cg.du;
        d_label_emb.col(c) += cg.dv;
      }
    }
  }
  report.cmw = report.cmw_terms.sum();

  if (options.include_query && n_query > 0) {
    const PrototypeSet protos = build_prototypes(params, episode, support, label_emb,
                                                 options.variant, options.dropout);
    Eigen::MatrixXd d_protos;
    if (grads) d_protos = Eigen::MatrixXd::Zero(params.config.joint_dim, n_labels);
    std::vector<ImageEmbedding> query;
    Eigen::MatrixXd query_pooled(params.visual_proj.cols(), n_query);
    Eigen::MatrixXd d_query_global;
    if (grads) d_query_global = Eigen::MatrixXd::Zero(params.config.joint_dim, n_query);
    for (Eigen::Index q = 0; q < n_query; ++q) {
      const FeatureMap& img = *episode.query[static_cast<std::size_t>(q)];
      query_pooled.col(q) = adaptive_avg_pool(img.local);
      const Eigen::VectorXd g = params.visual_proj * query_pooled.col(q);
      require_finite(g, "query embeddings");
      for (Eigen::Index c = 0; c < n_labels; ++c) {
        const auto& p = protos.labels[static_cast<std::size_t>(c)].prototype;
        const double y = episode.query_truth(q, c);
        const double s = lambda * cosine_sim(g, p);
        report.query_terms(q, c) = binary_cross_entropy(s, y);
        if (grads) {
          const auto cg = cosine_sim_backward(
              g, p, options.gamma * lambda * binary_cross_entropy_grad(s, y));
          d_query_global.col(q) += cg.du;
          d_protos.col(c) += cg.dv;
        }
      }
    }
    report.query = report.query_terms.sum();

    if (grads) {
      grads->visual_proj.noalias() += d_query_global * query_pooled.transpose();
      for (Eigen::Index c = 0; c < n_labels; ++c) {
        const auto& lp = protos.labels[static_cast<std::size_t>(c)];
        const AttentionGrad ag = lp.attention
                                     ? attention_backward(params, lp, d_protos.col(c), *grads)
                                     : simple_backward(params, lp, d_protos.col(c));
        d_label_emb.col(c) += ag.d_label;
        for (std::size_t k = 0; k < lp.sources.size(); ++k) {
          const auto& src = lp.sources[k];
          const auto col = static_cast<Eigen::Index>(k);
          if (src.cell >= 0) {
            d_support_locals[static_cast<std::size_t>(src.support_index)].col(src.cell) +=
                ag.d_pooled.col(col);
          } else {
            d_support_global.col(src.support_index) += ag.d_pooled.col(col);
          }
        }
      }
    }
  }

  report.total = report.cmw + options.gamma * report.query;
  if (!std::isfinite(report.total)) throw NumericalFaultError("non-finite loss");

  if (grads) {
    // g = A_visual * pool(F) and U = A_visual * F.
    for (Eigen::Index i = 0; i < n_support; ++i) {
      const FeatureMap& img = *episode.support[static_cast<std::size_t>(i)];
      grads->visual_proj.noalias() +=
          d_support_global.col(i) * adaptive_avg_pool(img.local).transpose();
      grads->visual_proj.noalias() +=
          d_support_locals[static_cast<std::size_t>(i)] * img.local.transpose();
    }
    grads->text_proj.noalias() += d_label_emb * label_vectors.transpose();
    for (const auto& view : tensor_views(std::as_const(*grads))) {
      if (!view.values.allFinite()) {
        throw NumericalFaultError("non-finite gradient in " + view.name);
      }
    }
  }
  return report;
}

}  // namespace

double cmw_loss(const ModelParameters& params, const Episode& episode,
                const Eigen::MatrixXd& label_vectors) {
  LossOptions options;
  options.include_query = false;
  return run_episode(params, episode, label_vectors, options, nullptr).cmw;
}

double query_loss(const ModelParameters& params, const Episode& episode,
                  const PrototypeSet& prototypes) {
  double sum = 0.0;
  for (std::size_t q = 0; q < episode.query.size(); ++q) {
    const Eigen::VectorXd g = embed_image(params, *episode.query[q]).global;
    for (std::size_t c = 0; c < prototypes.labels.size(); ++c) {
      const double s = score_query(params, g, prototypes.labels[c].prototype);
      sum += binary_cross_entropy(
          s, episode.query_truth(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(c)));
    }
  }
  return sum;
}

LossReport episode_loss(const ModelParameters& params, const Episode& episode,
                        const Eigen::MatrixXd& label_vectors, const LossOptions& options) {
  return run_episode(params, episode, label_vectors, options, nullptr);
}

GradientResult compute_gradients(const ModelParameters& params, const Episode& episode,
                                 const Eigen::MatrixXd& label_vectors,
                                 const LossOptions& options) {
  GradientResult result{{}, zeros_like(params)};
  result.loss = run_episode(params, episode, label_vectors, options, &result.gradients);
  return result;
}

}  // namespace mlfsic
