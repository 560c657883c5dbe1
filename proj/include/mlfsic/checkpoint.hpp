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

#ifndef MLFSIC_CHECKPOINT_HPP_
#define MLFSIC_CHECKPOINT_HPP_

// MLCK checkpoint, little-endian:
//
//   "MLCK" | u8 version (0x01)
//   u32 length | resolved config text
//   u32 length | rng state text
//   u64 n, d_w, d_j, n_a, d_h | f64 lambda, dropout
//   u32 tensor count | per tensor: u32 name length | name | u64 count | f64[count]

#include <cstdint>
#include <string>
#include <string_view>

#include "mlfsic/model.hpp"

namespace mlfsic {

inline constexpr char kCheckpointMagic[4] = {'M', 'L', 'C', 'K'};
inline constexpr std::uint8_t kCheckpointVersion = 0x01;

struct Checkpoint {
  ModelParameters params;
  std::string config_text;
  std::string rng_state;
};

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::string_view bytes);

}  // namespace mlfsic

#endif  // MLFSIC_CHECKPOINT_HPP_
