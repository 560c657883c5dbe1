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

#include "mlfsic/word_embeddings.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include "mlfsic/errors.hpp"

namespace mlfsic {

std::string normalize_token(std::string_view token) {
  std::string out(token);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

bool WordEmbeddingTable::contains(std::string_view token) const {
  return index_.count(normalize_token(token)) > 0;
}

const Eigen::VectorXd& WordEmbeddingTable::at(std::string_view token) const {
  auto it = index_.find(normalize_token(token));
  if (it == index_.end()) {
    throw OutOfVocabularyError(std::string(token));
  }
  return vectors_[it->second];
}

bool WordEmbeddingTable::insert(std::string_view token, Eigen::VectorXd vector) {
  if (static_cast<std::size_t>(vector.size()) != dim_) {
    throw DimensionError("embedding for '" + std::string(token) + "' has length " +
                         std::to_string(vector.size()) + ", expected " +
                         std::to_string(dim_));
  }
  std::string key = normalize_token(token);
  if (index_.count(key) > 0) {
    return false;
  }
  index_.emplace(key, tokens_.size());
  tokens_.push_back(std::move(key));
  vectors_.push_back(std::move(vector));
  return true;
}

namespace {

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

}  // namespace

WordEmbeddingTable parse_word_embeddings(std::istream& in, std::size_t expected_dim) {
  std::optional<WordEmbeddingTable> table;
  if (expected_dim > 0) table.emplace(expected_dim);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    if (fields.size() < 2) {
      throw ParseError("record has a token but no values", line_no);
    }
    const std::size_t dim = fields.size() - 1;
    if (!table) table.emplace(dim);
    if (dim != table->dim()) {
      throw ParseError("dimension mismatch: got " + std::to_string(dim) +
                           " values, expected " + std::to_string(table->dim()),
                       line_no);
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < dim; ++k) {
      const std::string_view f = fields[k + 1];
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw ParseError("malformed value '" + std::string(f) + "'", line_no);
      }
      v[static_cast<Eigen::Index>(k)] = value;
    }
    if (!table->insert(fields[0], std::move(v))) {
      throw ParseError("duplicate token '" + std::string(fields[0]) + "'", line_no);
    }
  }
  return table ? std::move(*table) : WordEmbeddingTable(expected_dim);
}

void write_word_embeddings(std::ostream& out, const WordEmbeddingTable& table) {
  char buf[32];
  for (const auto& token : table.tokens()) {
    out << token;
    const auto& v = table.at(token);
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      std::snprintf(buf, sizeof buf, " %.17g", v[k]);
      out << buf;
    }
    out << '\n';
  }
}

Eigen::VectorXd label_vector(const WordEmbeddingTable& table, std::string_view label) {
  const auto tokens = split_whitespace(label);
  if (tokens.empty()) {
    throw Error("label_vector: empty label");
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(table.dim()));
  for (const auto token : tokens) {
    sum += table.at(token);
  }
  return sum / static_cast<double>(tokens.size());
}

Eigen::MatrixXd label_matrix(const WordEmbeddingTable& table,
                             std::span<const std::string> labels) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(table.dim()),
                    static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    m.col(static_cast<Eigen::Index>(i)) = label_vector(table, labels[i]);
  }
  return m;
}

}  // namespace mlfsic
