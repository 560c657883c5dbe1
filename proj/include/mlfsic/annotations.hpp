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

#ifndef MLFSIC_ANNOTATIONS_HPP_
#define MLFSIC_ANNOTATIONS_HPP_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mlfsic/dataset.hpp"
#include "mlfsic/word_embeddings.hpp"

namespace mlfsic {

// One line of the annotation stream:
//   {"image_id": "...", "labels": ["..."], "feature_file": "..."}
struct AnnotationRecord {
  std::string image_id;
  std::vector<std::string> labels;
  std::string feature_file;
  std::size_t line = 0;
};

// Annotation records routed to splits, before feature payloads are loaded.
struct SplitSkeleton {
  SplitLabels labels;
  std::vector<AnnotationRecord> train;
  std::vector<AnnotationRecord> val;
  std::vector<AnnotationRecord> test;
  std::size_t dropped = 0;

  const std::vector<AnnotationRecord>& records(SplitRole role) const;
};

// {"train": [...], "val": [...], "test": [...]}; the three sets must be
// pairwise disjoint.
SplitLabels parse_split_file(std::istream& in);
std::string split_file_json(const SplitLabels& labels);

// Routes every record to the first role (test, val, train) it is admissible
// for. Records admissible for none are dropped. When `stream_role` is set the
// stream is taken to hold candidates for that role only and records that fail
// its rule are dropped.
SplitSkeleton load_annotations(std::istream& in, const SplitLabels& labels,
                               std::optional<SplitRole> stream_role = {});

std::string annotation_line(const AnnotationRecord& record);

// Resolves every record's feature_file against `feature_root`, reads the
// referenced MLFV containers and assembles the split. Throws when an image id
// is missing from its container.
DatasetSplit load_dataset(const SplitSkeleton& skeleton,
                          const std::filesystem::path& feature_root);

}  // namespace mlfsic

#endif  // MLFSIC_ANNOTATIONS_HPP_
