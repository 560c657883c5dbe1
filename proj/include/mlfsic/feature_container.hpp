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

#ifndef MLFSIC_FEATURE_CONTAINER_HPP_
#define MLFSIC_FEATURE_CONTAINER_HPP_

// MLFV feature container, little-endian:
//
//   "MLFV" | u8 version (0x01) | u32 record count | u32 n | u32 h | u32 w
//   per record:
//     u16 id length | id bytes
//     u16 label count | per label: u16 length | bytes
//     n*h*w float32, channel-major then row-major over (h, w)
//
// Values are down-converted to float32 on write and widened on read.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mlfsic/dataset.hpp"

namespace mlfsic {

inline constexpr char kFeatureMagic[4] = {'M', 'L', 'F', 'V'};
inline constexpr std::uint8_t kFeatureVersion = 0x01;
inline constexpr std::size_t kFeatureHeaderSize = 4 + 1 + 4 + 3 * 4;

std::string encode_feature_container(std::span<const FeatureMap> maps);
std::vector<FeatureMap> decode_feature_container(std::string_view bytes);

void write_feature_container(std::ostream& out, std::span<const FeatureMap> maps);
std::vector<FeatureMap> read_feature_container(std::istream& in);

}  // namespace mlfsic

#endif  // MLFSIC_FEATURE_CONTAINER_HPP_
