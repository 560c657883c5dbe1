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

#include "mlfsic/checkpoint.hpp"

#include "byte_io.hpp"
#include "mlfsic/errors.hpp"

namespace mlfsic {

using internal::ByteReader;
using internal::ByteWriter;

std::string encode_checkpoint(const Checkpoint& checkpoint) {
  const auto& p = checkpoint.params;
  const auto& cfg = p.config;
  ByteWriter w;
  w.bytes(std::string_view(kCheckpointMagic, 4));
  w.u8(kCheckpointVersion);
  w.long_string(checkpoint.config_text);
  w.long_string(checkpoint.rng_state);
  w.u64(static_cast<std::uint64_t>(cfg.channels));
  w.u64(static_cast<std::uint64_t>(cfg.word_dim));
  w.u64(static_cast<std::uint64_t>(cfg.joint_dim));
  w.u64(static_cast<std::uint64_t>(cfg.heads));
  w.u64(static_cast<std::uint64_t>(cfg.hidden_dim));
  w.f64(cfg.lambda);
  w.f64(cfg.dropout);
  const auto views = tensor_views(p);
  w.u32(static_cast<std::uint32_t>(views.size()));
  for (const auto& view : views) {
    w.long_string(view.name);
    w.u64(static_cast<std::uint64_t>(view.values.size()));
    for (Eigen::Index i = 0; i < view.values.size(); ++i) w.f64(view.values[i]);
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.bytes(4) != std::string_view(kCheckpointMagic, 4)) {
    throw FormatError("bad checkpoint magic", 0);
  }
  if (const auto version = r.u8(); version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
  }
  Checkpoint ck;
  ck.config_text = r.long_string();
  ck.rng_state = r.long_string();
  ModelConfig cfg;
  cfg.channels = static_cast<Eigen::Index>(r.u64());
  cfg.word_dim = static_cast<Eigen::Index>(r.u64());
  cfg.joint_dim = static_cast<Eigen::Index>(r.u64());
  cfg.heads = static_cast<Eigen::Index>(r.u64());
  cfg.hidden_dim = static_cast<Eigen::Index>(r.u64());
  cfg.lambda = r.f64();
  cfg.dropout = r.f64();
  const std::size_t config_offset = r.offset();
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid model config: ") + e.what(), config_offset);
  }
  // Shapes come from the config; the payload only has to agree with them.
  ck.params = init_parameters(cfg, 0);
  auto views = tensor_views(ck.params);
  const std::size_t count_offset = r.offset();
  if (r.u32() != views.size()) throw FormatError("tensor count mismatch", count_offset);
  for (auto& view : views) {
    const std::size_t at = r.offset();
    if (r.long_string() != view.name) {
      throw FormatError("expected tensor '" + view.name + "'", at);
    }
    const std::size_t size_at = r.offset();
    if (r.u64() != static_cast<std::uint64_t>(view.values.size())) {
      throw FormatError("tensor '" + view.name + "' has the wrong size", size_at);
    }
    for (Eigen::Index i = 0; i < view.values.size(); ++i) view.values[i] = r.f64();
  }
  if (!r.done()) throw FormatError("trailing bytes after last tensor", r.offset());
  return ck;
}

}  // namespace mlfsic
