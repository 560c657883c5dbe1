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

#ifndef MLFSIC_CONFIG_HPP_
#define MLFSIC_CONFIG_HPP_

// Run configuration. The text format is one `key = value` per line; `#`
// starts a comment, blank lines are ignored. Command-line flags `--key value`
// (underscores spelled as dashes) override file values.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mlfsic/evaluation.hpp"
#include "mlfsic/model.hpp"
#include "mlfsic/synthetic.hpp"
#include "mlfsic/training.hpp"

namespace mlfsic {

struct RunConfig {
  std::string data_dir;
  std::string embeddings;
  std::string annotations;
  std::string splits;
  std::string features;
  std::string checkpoint;
  std::string output_dir = ".";
  std::string report;
  std::size_t word_dim = 0;  // 0 = take it from the embedding file

  ModelConfig model;  // channels and word_dim are filled from the data
  TrainingConfig training;
  EvalOptions eval;
  std::string eval_split = "test";
  SyntheticSpec synth;
  double gradcheck_tolerance = 1e-4;
  std::uint64_t seed = 0;
};

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
  bool is_flag = false;  // boolean switch on the command line
};

const std::vector<ConfigKey>& config_keys();

using ConfigValues = std::map<std::string, std::string>;

// Throws ConfigError naming the line on malformed input or unknown keys.
ConfigValues parse_config_text(std::string_view text);

// Applies `values` over the documented defaults and validates invariants.
// Throws ConfigError naming the key.
RunConfig resolve_config(const ConfigValues& values);

ConfigValues config_values(const RunConfig& config);

// Sorted `key = value` lines; parse_config_text of it resolves to the same
// configuration.
std::string config_text(const RunConfig& config);

}  // namespace mlfsic

#endif  // MLFSIC_CONFIG_HPP_
