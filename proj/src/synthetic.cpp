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

#include "mlfsic/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>

#include "mlfsic/errors.hpp"

namespace mlfsic {

void SyntheticSpec::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw GenerationError(std::string("synthetic: ") + name + " must be positive");
  };
  positive(base_labels, "base_labels");
  positive(val_labels, "val_labels");
  positive(novel_labels, "novel_labels");
  positive(channels, "channels");
  positive(height, "height");
  positive(width, "width");
  positive(word_dim, "word_dim");
  positive(images_per_label, "images_per_label");
  positive(min_labels_per_image, "min_labels_per_image");
  if (!(noise >= 0.0)) throw GenerationError("synthetic: noise must be >= 0");
  if (max_labels_per_image < min_labels_per_image) {
    throw GenerationError("synthetic: max_labels_per_image < min_labels_per_image");
  }
  const int smallest = std::min({base_labels, val_labels, novel_labels});
  if (max_labels_per_image > smallest) {
    throw GenerationError("synthetic: a split has fewer labels than max_labels_per_image");
  }
  if (max_labels_per_image > height * width) {
    throw GenerationError("synthetic: more labels per image than spatial cells");
  }
}

namespace {

std::vector<std::string> label_names(const char* prefix, int count) {
  std::vector<std::string> names;
  char buf[64];
  for (int i = 0; i < count; ++i) {
    std::snprintf(buf, sizeof buf, "%s_%02d", prefix, i);
    names.emplace_back(buf);
  }
  return names;
}

Eigen::VectorXd random_unit(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  do {
    for (int k = 0; k < dim; ++k) v[k] = normal(rng);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  SyntheticDataset out;
  out.embeddings = WordEmbeddingTable(static_cast<std::size_t>(spec.word_dim));

  std::mt19937_64 sig_rng(spec.signature_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  out.signature_map.resize(spec.channels, spec.word_dim);
  for (Eigen::Index j = 0; j < out.signature_map.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.signature_map.rows(); ++i) {
      out.signature_map(i, j) = normal(sig_rng);
    }
  }

  std::mt19937_64 rng(seed);
  out.split.labels.train = label_names("base", spec.base_labels);
  out.split.labels.val = label_names("val", spec.val_labels);
  out.split.labels.test = label_names("novel", spec.novel_labels);
  for (SplitRole role : {SplitRole::kTrain, SplitRole::kVal, SplitRole::kTest}) {
    for (const auto& label : out.split.labels.of(role)) {
      out.embeddings.insert(label, random_unit(rng, spec.word_dim));
    }
  }

  const int cells = spec.height * spec.width;
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<int> label_count(spec.min_labels_per_image,
                                                 spec.max_labels_per_image);
  for (SplitRole role : {SplitRole::kTrain, SplitRole::kVal, SplitRole::kTest}) {
    const auto& labels = out.split.labels.of(role);
    auto& images = out.split.images(role);
    const int n_labels = static_cast<int>(labels.size());
    std::vector<int> others(static_cast<std::size_t>(n_labels));
    std::vector<int> cell_order(static_cast<std::size_t>(cells));
    int serial = 0;
    for (int primary = 0; primary < n_labels; ++primary) {
      for (int k = 0; k < spec.images_per_label; ++k) {
        const int count = label_count(rng);
        std::iota(others.begin(), others.end(), 0);
        std::swap(others[0], others[static_cast<std::size_t>(primary)]);
        std::shuffle(others.begin() + 1, others.end(), rng);
        std::iota(cell_order.begin(), cell_order.end(), 0);
        std::shuffle(cell_order.begin(), cell_order.end(), rng);

        Eigen::MatrixXd local(spec.channels, cells);
        for (Eigen::Index cell = 0; cell < cells; ++cell) {
          for (Eigen::Index c = 0; c < spec.channels; ++c) {
            local(c, cell) = spec.noise * noise(rng);
          }
        }
        char id[64];
        std::snprintf(id, sizeof id, "%s_%06d", std::string(to_string(role)).c_str(), serial++);
        std::vector<std::string> image_labels;
        auto& planted = out.planted_cells[id];
        for (int t = 0; t < count; ++t) {
          const auto& label = labels[static_cast<std::size_t>(others[static_cast<std::size_t>(t)])];
          const int cell = cell_order[static_cast<std::size_t>(t)];
          local.col(cell) += out.signature_map * out.embeddings.at(label);
          image_labels.push_back(label);
          planted[label] = cell;
        }
        images.push_back(make_feature_map(id, std::move(local), spec.height, spec.width,
                                          std::move(image_labels)));
      }
    }
  }
  validate_split(out.split);
  return out;
}

}  // namespace mlfsic
