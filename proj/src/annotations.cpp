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

#include "mlfsic/annotations.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <unordered_map>

#include "json.hpp"
#include "mlfsic/errors.hpp"
#include "mlfsic/feature_container.hpp"

namespace mlfsic {

using nlohmann::json;

const std::vector<AnnotationRecord>& SplitSkeleton::records(SplitRole role) const {
  switch (role) {
    case SplitRole::kTrain:
      return train;
    case SplitRole::kVal:
      return val;
    case SplitRole::kTest:
      break;
  }
  return test;
}

namespace {

std::vector<std::string> string_list(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_array()) {
    throw Error(std::string("split file: missing array '") + key + "'");
  }
  std::vector<std::string> out;
  for (const auto& v : doc[key]) {
    if (!v.is_string()) throw Error(std::string("split file: non-string in '") + key + "'");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

SplitLabels parse_split_file(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(std::string("split file: ") + e.what());
  }
  SplitLabels labels{string_list(doc, "train"), string_list(doc, "val"),
                     string_list(doc, "test")};
  std::set<std::string> seen;
  for (SplitRole role : {SplitRole::kTrain, SplitRole::kVal, SplitRole::kTest}) {
    for (const auto& l : labels.of(role)) {
      if (!seen.insert(l).second) {
        throw Error("split file: label '" + l + "' listed more than once");
      }
    }
  }
  return labels;
}

std::string split_file_json(const SplitLabels& labels) {
  json doc = {{"train", labels.train}, {"val", labels.val}, {"test", labels.test}};
  return doc.dump(2) + "\n";
}

std::string annotation_line(const AnnotationRecord& record) {
  json doc = {{"image_id", record.image_id},
              {"labels", record.labels},
              {"feature_file", record.feature_file}};
  return doc.dump();
}

SplitSkeleton load_annotations(std::istream& in, const SplitLabels& labels,
                               std::optional<SplitRole> stream_role) {
  std::set<std::string> known;
  for (SplitRole role : {SplitRole::kTrain, SplitRole::kVal, SplitRole::kTest}) {
    known.insert(labels.of(role).begin(), labels.of(role).end());
  }
  SplitSkeleton out;
  out.labels = labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(),
                    [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    AnnotationRecord rec;
    rec.line = line_no;
    try {
      rec.image_id = doc.at("image_id").get<std::string>();
      rec.labels = doc.at("labels").get<std::vector<std::string>>();
      rec.feature_file = doc.at("feature_file").get<std::string>();
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad record: ") + e.what(), line_no);
    }
    for (const auto& l : rec.labels) {
      if (known.count(l) == 0) {
        throw ParseError("unknown label '" + l + "'", line_no);
      }
    }
    std::sort(rec.labels.begin(), rec.labels.end());
    rec.labels.erase(std::unique(rec.labels.begin(), rec.labels.end()), rec.labels.end());

    std::optional<SplitRole> target;
    if (stream_role) {
      if (admissible(labels, *stream_role, rec.labels)) target = stream_role;
    } else {
      for (SplitRole role : {SplitRole::kTest, SplitRole::kVal, SplitRole::kTrain}) {
        if (admissible(labels, role, rec.labels)) {
          target = role;
          break;
        }
      }
    }
    if (!target) {
      ++out.dropped;
      continue;
    }
    switch (*target) {
      case SplitRole::kTrain:
        out.train.push_back(std::move(rec));
        break;
      case SplitRole::kVal:
        out.val.push_back(std::move(rec));
        break;
      case SplitRole::kTest:
        out.test.push_back(std::move(rec));
        break;
    }
  }
  return out;
}

DatasetSplit load_dataset(const SplitSkeleton& skeleton,
                          const std::filesystem::path& feature_root) {
  // Each container is read once; records are then looked up by image id.
  std::map<std::string, std::unordered_map<std::string, FeatureMap>> containers;
  auto container = [&](const std::string& file)
      -> std::unordered_map<std::string, FeatureMap>& {
    auto it = containers.find(file);
    if (it != containers.end()) return it->second;
    const auto path = feature_root / file;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open feature file " + path.string());
    std::unordered_map<std::string, FeatureMap> by_id;
    try {
      for (auto& map : read_feature_container(in)) {
        std::string id = map.image_id;
        by_id.emplace(std::move(id), std::move(map));
      }
    } catch (const FormatError& e) {
      throw Error(path.string() + ": " + e.what());
    }
    return containers.emplace(file, std::move(by_id)).first->second;
  };

  DatasetSplit split;
  split.labels = skeleton.labels;
  for (SplitRole role : {SplitRole::kTrain, SplitRole::kVal, SplitRole::kTest}) {
    auto& images = split.images(role);
    for (const auto& rec : skeleton.records(role)) {
      auto& by_id = container(rec.feature_file);
      auto it = by_id.find(rec.image_id);
      if (it == by_id.end()) {
        throw ParseError("image '" + rec.image_id + "' not found in " + rec.feature_file,
                         rec.line);
      }
      images.push_back(make_feature_map(rec.image_id, it->second.local,
                                        it->second.height, it->second.width,
                                        rec.labels));
    }
  }
  validate_split(split);
  return split;
}

}  // namespace mlfsic
