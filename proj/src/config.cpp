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

#include "mlfsic/config.hpp"

#include <charconv>
#include <cstring>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "mlfsic/errors.hpp"

namespace mlfsic {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"data_dir", "", "directory holding embeddings.txt, annotations.jsonl, splits.json"},
      {"embeddings", "", "word-embedding text file"},
      {"annotations", "", "annotation JSONL file"},
      {"splits", "", "split label file (JSON)"},
      {"features", "", "root for feature_file paths (default: annotation directory)"},
      {"checkpoint", "", "checkpoint path (written by train, read by eval)"},
      {"output_dir", ".", "directory for reports, curves and traces"},
      {"report", "", "evaluation report path (default: <output_dir>/report.json)"},
      {"word_dim", "0", "expected embedding dimension, 0 to infer"},
      {"dj", "512", "joint embedding dimension"},
      {"heads", "8", "attention heads; must divide dj"},
      {"hidden", "0", "MLP hidden width, 0 for dj"},
      {"lambda", "10", "cosine scale"},
      {"dropout", "0.1", "dropout rate after the MLP GeLU during training"},
      {"epochs", "200", "training epochs"},
      {"warmup", "10", "linear learning-rate warm-up epochs"},
      {"lr", "0.001", "Adam base learning rate"},
      {"episodes_per_epoch", "100", "episodes (optimizer steps) per epoch"},
      {"queries_per_label", "4", "query images drawn per label"},
      {"gamma", "1", "weight of the query loss"},
      {"finetune_epochs", "40", "Adam steps of test-time fine-tuning"},
      {"variant", "full", "prototype variant: full, simple_global, attn_global, simple_local"},
      {"eval_episodes", "200", "test episodes"},
      {"eval_split", "test", "split evaluated: val or test"},
      {"finetune", "false", "fine-tune the projections on each test support set", true},
      {"topk", "0", "score query locals with the top-k sum (0 = global scoring)"},
      {"ap_pooling", "episode", "episode (average per-episode metrics) or global"},
      {"seed", "0", "seed for initialization, sampling and dropout"},
      {"gradcheck_tolerance", "1e-4", "maximum relative error accepted by gradcheck"},
      {"synth_base_labels", "24", "synthetic: base (train) labels"},
      {"synth_val_labels", "8", "synthetic: validation labels"},
      {"synth_novel_labels", "8", "synthetic: novel (test) labels"},
      {"synth_channels", "32", "synthetic: feature channels n"},
      {"synth_height", "5", "synthetic: feature map height"},
      {"synth_width", "5", "synthetic: feature map width"},
      {"synth_word_dim", "16", "synthetic: embedding dimension"},
      {"synth_noise", "0.3", "synthetic: Gaussian noise scale"},
      {"synth_images_per_label", "40", "synthetic: images per primary label"},
      {"synth_min_labels", "1", "synthetic: minimum labels per image"},
      {"synth_max_labels", "3", "synthetic: maximum labels per image"},
      {"synth_signature_seed", "1", "synthetic: seed of the shared signature map"},
  };
  return keys;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool known_key(const std::string& key) {
  for (const auto& k : config_keys()) {
    if (k.name == key) return true;
  }
  return false;
}

template <typename T>
T parse_number(const ConfigValues& values, const std::string& key) {
  const std::string& text = values.at(key);
  T out{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError(key + ": cannot parse '" + text + "'");
  }
  return out;
}

bool parse_bool(const ConfigValues& values, const std::string& key) {
  const std::string& text = values.at(key);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  double back = 0.0;
  std::from_chars(buf, buf + std::strlen(buf), back);
  if (back != v) std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ConfigValues parse_config_text(std::string_view text) {
  ConfigValues values;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (!known_key(key)) {
      throw ConfigError(key + ": unknown key (config line " + std::to_string(line_no) + ")");
    }
    values[key] = trim(std::string_view(body).substr(eq + 1));
  }
  return values;
}

RunConfig resolve_config(const ConfigValues& overrides) {
  ConfigValues v;
  for (const auto& k : config_keys()) v[k.name] = k.default_value;
  for (const auto& [key, value] : overrides) {
    if (!known_key(key)) throw ConfigError(key + ": unknown key");
    v[key] = value;
  }

  RunConfig c;
  c.data_dir = v["data_dir"];
  c.embeddings = v["embeddings"];
  c.annotations = v["annotations"];
  c.splits = v["splits"];
  c.features = v["features"];
  const std::filesystem::path data(c.data_dir);
  if (!c.data_dir.empty()) {
    if (c.embeddings.empty()) c.embeddings = (data / "embeddings.txt").string();
    if (c.annotations.empty()) c.annotations = (data / "annotations.jsonl").string();
    if (c.splits.empty()) c.splits = (data / "splits.json").string();
  }
  if (c.features.empty() && !c.annotations.empty()) {
    c.features = std::filesystem::path(c.annotations).parent_path().string();
  }
  c.checkpoint = v["checkpoint"];
  c.output_dir = v["output_dir"];
  c.report = v["report"];
  c.word_dim = parse_number<std::size_t>(v, "word_dim");

  c.model.joint_dim = parse_number<Eigen::Index>(v, "dj");
  c.model.heads = parse_number<Eigen::Index>(v, "heads");
  c.model.hidden_dim = parse_number<Eigen::Index>(v, "hidden");
  c.model.lambda = parse_number<double>(v, "lambda");
  c.model.dropout = parse_number<double>(v, "dropout");
  if (c.model.joint_dim < 1) throw ConfigError("dj: must be positive");
  if (c.model.heads < 1) throw ConfigError("heads: must be positive");
  if (c.model.joint_dim % c.model.heads != 0) {
    throw ConfigError("heads: dj=" + std::to_string(c.model.joint_dim) +
                      " is not divisible by heads=" + std::to_string(c.model.heads));
  }
  if (c.model.hidden_dim < 0) throw ConfigError("hidden: must be >= 0");
  if (!(c.model.lambda > 0.0)) throw ConfigError("lambda: must be positive");
  if (!(c.model.dropout >= 0.0 && c.model.dropout < 1.0)) {
    throw ConfigError("dropout: must lie in [0, 1)");
  }

  c.seed = parse_number<std::uint64_t>(v, "seed");
  auto& t = c.training;
  t.epochs = parse_number<int>(v, "epochs");
  t.warmup_epochs = parse_number<int>(v, "warmup");
  t.base_lr = parse_number<double>(v, "lr");
  t.episodes_per_epoch = parse_number<int>(v, "episodes_per_epoch");
  t.queries_per_label = parse_number<int>(v, "queries_per_label");
  t.gamma = parse_number<double>(v, "gamma");
  t.finetune_epochs = parse_number<int>(v, "finetune_epochs");
  t.variant = prototype_variant_from_string(v["variant"]);
  t.seed = c.seed;
  t.dropout = c.model.dropout > 0.0;
  t.validate();

  auto& e = c.eval;
  e.episodes = parse_number<int>(v, "eval_episodes");
  if (e.episodes < 1) throw ConfigError("eval_episodes: must be positive");
  e.queries_per_label = t.queries_per_label;
  e.seed = c.seed;
  e.variant = t.variant;
  e.finetune = parse_bool(v, "finetune");
  e.finetune_epochs = t.finetune_epochs;
  e.finetune_lr = t.base_lr;
  e.topk = parse_number<int>(v, "topk");
  if (e.topk < 0) throw ConfigError("topk: must be >= 0");
  if (v["ap_pooling"] == "episode") {
    e.pooling = ApPooling::kEpisode;
  } else if (v["ap_pooling"] == "global") {
    e.pooling = ApPooling::kGlobal;
  } else {
    throw ConfigError("ap_pooling: expected episode or global");
  }
  c.eval_split = v["eval_split"];
  if (c.eval_split != "val" && c.eval_split != "test" && c.eval_split != "train") {
    throw ConfigError("eval_split: expected train, val or test");
  }
  c.gradcheck_tolerance = parse_number<double>(v, "gradcheck_tolerance");

  auto& s = c.synth;
  s.base_labels = parse_number<int>(v, "synth_base_labels");
  s.val_labels = parse_number<int>(v, "synth_val_labels");
  s.novel_labels = parse_number<int>(v, "synth_novel_labels");
  s.channels = parse_number<int>(v, "synth_channels");
  s.height = parse_number<int>(v, "synth_height");
  s.width = parse_number<int>(v, "synth_width");
  s.word_dim = parse_number<int>(v, "synth_word_dim");
  s.noise = parse_number<double>(v, "synth_noise");
  s.images_per_label = parse_number<int>(v, "synth_images_per_label");
  s.min_labels_per_image = parse_number<int>(v, "synth_min_labels");
  s.max_labels_per_image = parse_number<int>(v, "synth_max_labels");
  s.signature_seed = parse_number<std::uint64_t>(v, "synth_signature_seed");
  try {
    s.validate();
  } catch (const GenerationError& err) {
    throw ConfigError(err.what());
  }
  return c;
}

ConfigValues config_values(const RunConfig& c) {
  ConfigValues v;
  v["data_dir"] = c.data_dir;
  v["embeddings"] = c.embeddings;
  v["annotations"] = c.annotations;
  v["splits"] = c.splits;
  v["features"] = c.features;
  v["checkpoint"] = c.checkpoint;
  v["output_dir"] = c.output_dir;
  v["report"] = c.report;
  v["word_dim"] = std::to_string(c.word_dim);
  v["dj"] = std::to_string(c.model.joint_dim);
  v["heads"] = std::to_string(c.model.heads);
  v["hidden"] = std::to_string(c.model.hidden_dim);
  v["lambda"] = format_double(c.model.lambda);
  v["dropout"] = format_double(c.model.dropout);
  v["epochs"] = std::to_string(c.training.epochs);
  v["warmup"] = std::to_string(c.training.warmup_epochs);
  v["lr"] = format_double(c.training.base_lr);
  v["episodes_per_epoch"] = std::to_string(c.training.episodes_per_epoch);
  v["queries_per_label"] = std::to_string(c.training.queries_per_label);
  v["gamma"] = format_double(c.training.gamma);
  v["finetune_epochs"] = std::to_string(c.training.finetune_epochs);
  v["variant"] = std::string(to_string(c.training.variant));
  v["eval_episodes"] = std::to_string(c.eval.episodes);
  v["eval_split"] = c.eval_split;
  v["finetune"] = c.eval.finetune ? "true" : "false";
  v["topk"] = std::to_string(c.eval.topk);
  v["ap_pooling"] = c.eval.pooling == ApPooling::kEpisode ? "episode" : "global";
  v["seed"] = std::to_string(c.seed);
  v["gradcheck_tolerance"] = format_double(c.gradcheck_tolerance);
  v["synth_base_labels"] = std::to_string(c.synth.base_labels);
  v["synth_val_labels"] = std::to_string(c.synth.val_labels);
  v["synth_novel_labels"] = std::to_string(c.synth.novel_labels);
  v["synth_channels"] = std::to_string(c.synth.channels);
  v["synth_height"] = std::to_string(c.synth.height);
  v["synth_width"] = std::to_string(c.synth.width);
  v["synth_word_dim"] = std::to_string(c.synth.word_dim);
  v["synth_noise"] = format_double(c.synth.noise);
  v["synth_images_per_label"] = std::to_string(c.synth.images_per_label);
  v["synth_min_labels"] = std::to_string(c.synth.min_labels_per_image);
  v["synth_max_labels"] = std::to_string(c.synth.max_labels_per_image);
  v["synth_signature_seed"] = std::to_string(c.synth.signature_seed);
  return v;
}

std::string config_text(const RunConfig& config) {
  std::string out;
  for (const auto& [key, value] : config_values(config)) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

}  // namespace mlfsic
