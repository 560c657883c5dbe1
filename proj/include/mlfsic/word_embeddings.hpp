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

#ifndef MLFSIC_WORD_EMBEDDINGS_HPP_
#define MLFSIC_WORD_EMBEDDINGS_HPP_

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mlfsic {

// Token -> vector table. Tokens are stored lowercased and keep their
// insertion order so that writing a table is deterministic.
class WordEmbeddingTable {
 public:
  explicit WordEmbeddingTable(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;

  // Throws OutOfVocabularyError.
  const Eigen::VectorXd& at(std::string_view token) const;

  // Returns false (and stores nothing) when the lowercased token exists.
  // Throws DimensionError on a length mismatch.
  bool insert(std::string_view token, Eigen::VectorXd vector);

  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::size_t dim_;
  std::vector<std::string> tokens_;
  std::vector<Eigen::VectorXd> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

// GloVe text format: "token v1 v2 ... vd" per line. expected_dim == 0 takes
// the dimension from the first record. Blank lines are skipped.
WordEmbeddingTable parse_word_embeddings(std::istream& in,
                                         std::size_t expected_dim);

// Values are written with 17 significant digits so parsing restores them.
void write_word_embeddings(std::ostream& out, const WordEmbeddingTable& table);

std::string normalize_token(std::string_view token);

// Mean of the constituent token vectors of a (possibly multi-word) label.
Eigen::VectorXd label_vector(const WordEmbeddingTable& table,
                             std::string_view label);

// Column i holds label_vector(labels[i]).
Eigen::MatrixXd label_matrix(const WordEmbeddingTable& table,
                             std::span<const std::string> labels);

}  // namespace mlfsic

#endif  // MLFSIC_WORD_EMBEDDINGS_HPP_
