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

#include "mlfsic/feature_container.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>

#include "byte_io.hpp"
#include "mlfsic/errors.hpp"

namespace mlfsic {

using internal::ByteReader;
using internal::ByteWriter;

std::string encode_feature_container(std::span<const FeatureMap> maps) {
  ByteWriter w;
  w.bytes(std::string_view(kFeatureMagic, 4));
  w.u8(kFeatureVersion);
  w.u32(static_cast<std::uint32_t>(maps.size()));
  std::uint32_t n = 0, h = 0, wd = 0;
  if (!maps.empty()) {
    n = static_cast<std::uint32_t>(maps.front().channels());
    h = static_cast<std::uint32_t>(maps.front().height);
    wd = static_cast<std::uint32_t>(maps.front().width);
  }
  w.u32(n);
  w.u32(h);
  w.u32(wd);
  for (const auto& map : maps) {
    if (static_cast<std::uint32_t>(map.channels()) != n ||
        static_cast<std::uint32_t>(map.height) != h ||
        static_cast<std::uint32_t>(map.width) != wd ||
        map.cells() != static_cast<Eigen::Index>(h) * wd) {
      throw FormatError("extent mismatch in record '" + map.image_id + "'", w.offset());
    }
    w.short_string(map.image_id, "image id");
    if (map.labels.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw FormatError("too many labels", w.offset());
    }
    w.u16(static_cast<std::uint16_t>(map.labels.size()));
    for (const auto& label : map.labels) w.short_string(label, "label");
    for (Eigen::Index c = 0; c < map.local.rows(); ++c) {
      for (Eigen::Index cell = 0; cell < map.local.cols(); ++cell) {
        w.f32(static_cast<float>(map.local(c, cell)));
      }
    }
  }
  return w.take();
}

std::vector<FeatureMap> decode_feature_container(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.bytes(4) != std::string_view(kFeatureMagic, 4)) {
    throw FormatError("bad magic", 0);
  }
  const std::size_t version_offset = r.offset();
  if (const auto version = r.u8(); version != kFeatureVersion) {
    throw FormatError("unsupported version " + std::to_string(version), version_offset);
  }
  const std::uint32_t count = r.u32();
  const std::size_t extent_offset = r.offset();
  const std::uint32_t n = r.u32();
  const std::uint32_t h = r.u32();
  const std::uint32_t w = r.u32();
  if (count > 0 && (n == 0 || h == 0 || w == 0)) {
    throw FormatError("zero extent in a non-empty container", extent_offset);
  }
  std::vector<FeatureMap> maps;
  maps.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    FeatureMap map;
    map.image_id = r.short_string();
    const std::uint16_t label_count = r.u16();
    map.labels.reserve(label_count);
    for (std::uint16_t k = 0; k < label_count; ++k) map.labels.push_back(r.short_string());
    map.height = static_cast<int>(h);
    map.width = static_cast<int>(w);
    map.local.resize(n, static_cast<Eigen::Index>(h) * w);
    for (Eigen::Index c = 0; c < map.local.rows(); ++c) {
      for (Eigen::Index cell = 0; cell < map.local.cols(); ++cell) {
        map.local(c, cell) = static_cast<double>(r.f32());
      }
    }
    maps.push_back(std::move(map));
  }
  if (!r.done()) {
    throw FormatError("trailing bytes after last record", r.offset());
  }
  return maps;
}

void write_feature_container(std::ostream& out, std::span<const FeatureMap> maps) {
  const std::string bytes = encode_feature_container(maps);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<FeatureMap> read_feature_container(std::istream& in) {
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return decode_feature_container(bytes);
}

}  // namespace mlfsic
