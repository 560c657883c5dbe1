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

#ifndef MLFSIC_CANONICAL_JSON_HPP_
#define MLFSIC_CANONICAL_JSON_HPP_

#include <string>

#include "json.hpp"

namespace mlfsic {

// Objects with sorted keys, two-space indentation, floating point numbers
// printed with 12 fixed decimals. Equal documents give equal bytes.
std::string canonical_dump(const nlohmann::json& value);

}  // namespace mlfsic

#endif  // MLFSIC_CANONICAL_JSON_HPP_
