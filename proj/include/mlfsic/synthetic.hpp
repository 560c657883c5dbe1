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

#ifndef MLFSIC_SYNTHETIC_HPP_
#define MLFSIC_SYNTHETIC_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mlfsic/dataset.hpp"
#include "mlfsic/word_embeddings.hpp"

namespace mlfsic {

// Desk-scale dataset with planted label signatures. Every label c has a unit
// embedding w_c; a shared linear map G turns it into the visual signature
// G * w_c, which is written into one spatial cell of each image carrying c.
struct SyntheticSpec {
  int base_labels = 24;
  int val_labels = 8;
  int novel_labels = 8;
  int channels = 32;
  int height = 5;
  int width = 5;
  int word_dim = 16;
  std::uint64_t signature_seed = 1;
  double noise = 0.3;
  int images_per_label = 40;
  // Each image carries its primary label plus extras so that the total is
  // uniform in [min_labels_per_image, max_labels_per_image].
  int min_labels_per_image = 1;
  int max_labels_per_image = 3;

  void validate() const;
};

struct SyntheticDataset {
  WordEmbeddingTable embeddings;
  DatasetSplit split;
  Eigen::MatrixXd signature_map;  // channels x word_dim
  // image id -> (label -> planted cell index)
  std::map<std::string, std::map<std::string, int>> planted_cells;
};

SyntheticDataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace mlfsic

#endif  // MLFSIC_SYNTHETIC_HPP_
