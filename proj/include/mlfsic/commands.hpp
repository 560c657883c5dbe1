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

#ifndef MLFSIC_COMMANDS_HPP_
#define MLFSIC_COMMANDS_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mlfsic/model.hpp"
#include "mlfsic/training.hpp"

namespace mlfsic {

// Subcommands: gen-synth, train, eval, gradcheck, sample-episode,
// export-attention. Returns the process exit status; diagnostics go to `err`.
int run_command(const std::vector<std::string>& argv, std::ostream& out,
                std::ostream& err);

// Writes to a sibling temporary and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

struct GradientCheckResult {
  double max_rel_err = 0.0;
  std::string worst_tensor;
  long coordinates = 0;
};

// Random tiny model and episode (n=8, h=w=3, d_w=12, 4 labels, 4 support and
// 8 query images); compares every gradient coordinate with central
// differences of step `step`.
GradientCheckResult run_gradient_check(Eigen::Index joint_dim, Eigen::Index heads,
                                       std::uint64_t seed, double step = 1e-5,
                                       PrototypeVariant variant = PrototypeVariant::kFull);

// |analytic - numeric| / max(|analytic|, |numeric|, floor)
double gradient_relative_error(double analytic, double numeric);

}  // namespace mlfsic

#endif  // MLFSIC_COMMANDS_HPP_
