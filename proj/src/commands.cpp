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

#include "mlfsic/commands.hpp"

#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "mlfsic/annotations.hpp"
#include "mlfsic/canonical_json.hpp"
#include "mlfsic/checkpoint.hpp"
#include "mlfsic/config.hpp"
#include "mlfsic/errors.hpp"
#include "mlfsic/evaluation.hpp"
#include "mlfsic/feature_container.hpp"
#include "mlfsic/synthetic.hpp"
#include "mlfsic/word_embeddings.hpp"

namespace mlfsic {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw Error("short write to " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double gradient_relative_error(double analytic, double numeric) {
  // Below the floor both values are finite-difference noise.
  constexpr double kFloor = 1e-6;
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kFloor});
  return std::abs(analytic - numeric) / scale;
}

GradientCheckResult run_gradient_check(Eigen::Index joint_dim, Eigen::Index heads,
                                       std::uint64_t seed, double step,
                                       PrototypeVariant variant) {
  constexpr int kChannels = 8;
  constexpr int kSide = 3;
  constexpr int kWordDim = 12;
  constexpr int kLabels = 4;
  constexpr int kQueries = 8;

  ModelConfig cfg;
  cfg.channels = kChannels;
  cfg.word_dim = kWordDim;
  cfg.joint_dim = joint_dim;
  cfg.heads = heads;
  cfg.validate();
  const ModelParameters params = init_parameters(cfg, seed);

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(0.35);
  auto random_matrix = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal(rng);
    return m;
  };

  std::vector<std::string> labels;
  for (int c = 0; c < kLabels; ++c) labels.push_back("l" + std::to_string(c));
  std::vector<FeatureMap> pool;
  Episode episode;
  episode.labels = labels;
  episode.support_truth = Eigen::MatrixXd::Zero(kLabels, kLabels);
  episode.query_truth = Eigen::MatrixXd::Zero(kQueries, kLabels);
  for (int s = 0; s < kLabels; ++s) {
    episode.support_truth(s, s) = 1.0;
    for (int c = 0; c < kLabels; ++c)
      if (c != s && coin(rng)) episode.support_truth(s, c) = 1.0;
  }
  for (int q = 0; q < kQueries; ++q) {
    episode.query_truth(q, q % kLabels) = 1.0;
    for (int c = 0; c < kLabels; ++c)
      if (coin(rng)) episode.query_truth(q, c) = 1.0;
  }
  pool.reserve(kLabels + kQueries);
  for (int i = 0; i < kLabels + kQueries; ++i) {
    pool.push_back(make_feature_map("g" + std::to_string(i),
                                    random_matrix(kChannels, kSide * kSide), kSide,
                                    kSide, {}));
  }
  for (int s = 0; s < kLabels; ++s) episode.support.push_back(&pool[s]);
  for (int q = 0; q < kQueries; ++q) episode.query.push_back(&pool[kLabels + q]);
  const Eigen::MatrixXd label_vectors = random_matrix(kWordDim, kLabels);

  LossOptions options;
  options.gamma = 1.0;
  options.variant = variant;
  options.dropout = DropoutSpec::off();
  const GradientResult analytic =
      compute_gradients(params, episode, label_vectors, options);

  GradientCheckResult result;
  ModelParameters probe = params;
  auto probe_views = tensor_views(probe);
  const auto grad_views = tensor_views(analytic.gradients);
  for (std::size_t t = 0; t < probe_views.size(); ++t) {
    auto& values = probe_views[t].values;
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = episode_loss(probe, episode, label_vectors, options).total;
      values[i] = saved - step;
      const double down = episode_loss(probe, episode, label_vectors, options).total;
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = gradient_relative_error(grad_views[t].values[i], numeric);
      if (err >= result.max_rel_err) {
        result.max_rel_err = err;
        result.worst_tensor = probe_views[t].name;
      }
      ++result.coordinates;
    }
  }
  return result;
}

namespace {

struct LoadedData {
  WordEmbeddingTable embeddings;
  DatasetSplit split;
};

void require_file(const std::string& key, const std::string& path) {
  if (path.empty()) throw ConfigError(key + ": path required");
  if (!fs::exists(path)) throw Error(key + ": missing file " + path);
}

LoadedData load_data(const RunConfig& config) {
  require_file("embeddings", config.embeddings);
  require_file("splits", config.splits);
  require_file("annotations", config.annotations);
  LoadedData data;
  {
    std::ifstream in(config.embeddings);
    data.embeddings = parse_word_embeddings(in, config.word_dim);
  }
  SplitLabels labels;
  {
    std::ifstream in(config.splits);
    labels = parse_split_file(in);
  }
  std::ifstream in(config.annotations);
  const SplitSkeleton skeleton = load_annotations(in, labels);
  data.split = load_dataset(skeleton, config.features);
  return data;
}

Eigen::Index data_channels(const DatasetSplit& split) {
  for (const auto role : {SplitRole::kTrain, SplitRole::kVal, SplitRole::kTest}) {
    if (!split.images(role).empty()) return split.images(role).front().channels();
  }
  throw Error("dataset holds no images");
}

fs::path output_path(const RunConfig& config, const std::string& explicit_path,
                     const char* fallback) {
  if (!explicit_path.empty()) return explicit_path;
  return fs::path(config.output_dir) / fallback;
}

std::string commented(const std::string& text) {
  std::string out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out += "# " + line + "\n";
  return out;
}

nlohmann::json config_json(const RunConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, value] : config_values(config)) j[key] = value;
  return j;
}

int cmd_gen_synth(RunConfig config, std::ostream& out) {
  const SyntheticDataset data = generate_synthetic(config.synth, config.seed);
  const fs::path dir = config.output_dir;
  config.data_dir = dir.string();
  config.embeddings = (dir / "embeddings.txt").string();
  config.annotations = (dir / "annotations.jsonl").string();
  config.splits = (dir / "splits.json").string();
  config.features = dir.string();

  std::ostringstream emb;
  write_word_embeddings(emb, data.embeddings);
  write_file_atomic(config.embeddings, emb.str());
  write_file_atomic(config.splits, split_file_json(data.split.labels));

  std::string annotations;
  for (const auto role : {SplitRole::kTrain, SplitRole::kVal, SplitRole::kTest}) {
    const std::string file = std::string(to_string(role)) + ".mlfv";
    const auto& images = data.split.images(role);
    write_file_atomic(dir / file, encode_feature_container(images));
    for (const auto& img : images) {
      annotations += annotation_line({img.image_id, img.labels, file, 0});
      annotations += '\n';
    }
  }
  write_file_atomic(config.annotations, annotations);
  write_file_atomic(dir / "synth_config.txt", config_text(config));
  out << "wrote " << data.split.train.size() << " train, " << data.split.val.size()
      << " val, " << data.split.test.size() << " test images to " << dir.string()
      << "\n";
  return 0;
}

int cmd_train(RunConfig config, std::ostream& out) {
  const LoadedData data = load_data(config);
  config.model.channels = data_channels(data.split);
  config.model.word_dim = static_cast<Eigen::Index>(data.embeddings.dim());
  config.model.validate();
  const fs::path ckpt_path = output_path(config, config.checkpoint, "model.mlck");
  config.checkpoint = ckpt_path.string();
  const std::string echo = config_text(config);

  const EpisodeSource source =
      make_episode_source(data.split.train, data.split.labels.train, data.embeddings);
  TrainingResult result =
      train(init_parameters(config.model, config.seed), source, config.training);

  Checkpoint ckpt{std::move(result.params), echo, result.rng_state};
  write_file_atomic(ckpt_path, encode_checkpoint(ckpt));
  write_file_atomic(fs::path(config.output_dir) / "loss.csv",
                    commented(echo) + loss_curve_csv(result.curve));
  out << "trained " << config.training.epochs << " epochs; checkpoint "
      << ckpt_path.string() << "\n";
  return 0;
}

struct LoadedModel {
  LoadedData data;
  ModelParameters params;
};

LoadedModel load_model(RunConfig& config) {
  require_file("checkpoint", config.checkpoint);
  LoadedModel m{load_data(config), decode_checkpoint(read_file(config.checkpoint)).params};
  if (m.params.config.channels != data_channels(m.data.split) ||
      m.params.config.word_dim != static_cast<Eigen::Index>(m.data.embeddings.dim())) {
    throw DimensionError("checkpoint shapes do not match the dataset");
  }
  // The checkpoint decides the architecture.
  config.model = m.params.config;
  return m;
}

int cmd_eval(RunConfig config, std::ostream& out) {
  LoadedModel m = load_model(config);
  const SplitRole role = split_role_from_string(config.eval_split);
  const fs::path report_path = output_path(config, config.report, "report.json");
  config.report = report_path.string();
  const EpisodeSource source = make_episode_source(
      m.data.split.images(role), m.data.split.labels.of(role), m.data.embeddings);
  const EvalReport report = evaluate(m.params, source, config.eval);
  write_file_atomic(report_path, report_json(report, config_text(config)));
  char line[160];
  std::snprintf(line, sizeof line, "micro_ap %.4f macro_ap %.4f over %zu episodes\n",
                report.mean.micro.ap, report.mean.macro.ap, report.episodes.size());
  out << line;
  return 0;
}

int cmd_gradcheck(const RunConfig& config, std::ostream& out) {
  const GradientCheckResult r = run_gradient_check(
      config.model.joint_dim, config.model.heads, config.seed, 1e-5, config.training.variant);
  char line[200];
  const bool ok = r.max_rel_err < config.gradcheck_tolerance;
  std::snprintf(line, sizeof line, "max_rel_err %.3e %s %g (worst %s, %ld coordinates)\n",
                r.max_rel_err, ok ? "<" : ">=", config.gradcheck_tolerance,
                r.worst_tensor.c_str(), r.coordinates);
  out << line;
  return ok ? 0 : 1;
}

nlohmann::json image_entry(const FeatureMap& img) {
  return {{"image_id", img.image_id}, {"labels", img.labels}};
}

int cmd_sample_episode(const RunConfig& config, std::ostream& out) {
  const LoadedData data = load_data(config);
  const SplitRole role = split_role_from_string(config.eval_split);
  const auto& labels = data.split.labels.of(role);
  const Episode ep = sample_episode(data.split.images(role), labels,
                                    config.training.queries_per_label, config.seed);
  nlohmann::json j;
  j["config"] = config_json(config);
  j["split"] = config.eval_split;
  j["labels"] = ep.labels;
  j["support"] = nlohmann::json::array();
  j["query"] = nlohmann::json::array();
  for (const auto* img : ep.support) j["support"].push_back(image_entry(*img));
  for (const auto* img : ep.query) j["query"].push_back(image_entry(*img));
  out << canonical_dump(j);
  return 0;
}

nlohmann::json weight_grids(const Eigen::VectorXd& weights,
                            const std::vector<PooledSource>& sources,
                            const Episode& ep) {
  // One h x w grid per support image that contributed cells, in support order.
  std::vector<int> order;
  std::map<int, std::vector<std::vector<double>>> grids;
  for (std::size_t k = 0; k < sources.size(); ++k) {
    const auto [s, cell] = sources[k];
    const FeatureMap& img = *ep.support[s];
    auto it = grids.find(s);
    if (it == grids.end()) {
      order.push_back(s);
      it = grids.emplace(s, std::vector<std::vector<double>>(
                                img.height, std::vector<double>(img.width, 0.0)))
               .first;
    }
    if (cell >= 0) it->second[cell / img.width][cell % img.width] = weights[k];
  }
  nlohmann::json out = nlohmann::json::array();
  for (const int s : order) {
    out.push_back({{"image_id", ep.support[s]->image_id}, {"grid", grids[s]}});
  }
  return out;
}

int cmd_export_attention(RunConfig config, std::ostream& out) {
  if (config.training.variant != PrototypeVariant::kFull) {
    throw ConfigError("variant: export-attention needs the full variant");
  }
  LoadedModel m = load_model(config);
  const SplitRole role = split_role_from_string(config.eval_split);
  const auto& labels = m.data.split.labels.of(role);
  const Episode ep = sample_episode(m.data.split.images(role), labels,
                                    config.training.queries_per_label, config.seed);
  const Eigen::MatrixXd label_vectors = label_matrix(m.data.embeddings, ep.labels);
  const PrototypeSet protos = build_prototypes(m.params, ep, label_vectors,
                                               PrototypeVariant::kFull, DropoutSpec::off());
  nlohmann::json j;
  j["config"] = config_json(config);
  j["labels"] = nlohmann::json::array();
  for (const auto& lp : protos.labels) {
    const AttentionTrace& trace = *lp.attention;
    Eigen::VectorXd summed = Eigen::VectorXd::Zero(lp.sources.size());
    nlohmann::json heads = nlohmann::json::array();
    for (const auto& h : trace.heads) {
      heads.push_back(weight_grids(h.weights, lp.sources, ep));
      summed += h.weights;
    }
    j["labels"].push_back({{"label", lp.label},
                           {"heads", std::move(heads)},
                           {"summed", weight_grids(summed, lp.sources, ep)}});
  }
  const fs::path path = fs::path(config.output_dir) / "attention.json";
  write_file_atomic(path, canonical_dump(j));
  out << "wrote " << path.string() << "\n";
  return 0;
}

std::string flag_name(const std::string& key) {
  std::string name = key;
  std::replace(name.begin(), name.end(), '_', '-');
  return "--" + name;
}

}  // namespace

int run_command(const std::vector<std::string>& argv, std::ostream& out,
                std::ostream& err) {
  CLI::App app{"multi-label few-shot classification with label-conditioned attention",
               "mlfsic"};
  app.require_subcommand(1);
  std::string config_file;
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> options;
  const char* names[] = {"gen-synth", "train", "eval", "gradcheck", "sample-episode",
                         "export-attention"};
  std::vector<CLI::App*> subs;
  for (const char* name : names) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_file, "key = value config file");
    for (const auto& key : config_keys()) {
      CLI::Option* opt = nullptr;
      if (key.is_flag) {
        opt = sub->add_flag(flag_name(key.name), key.help);
      } else {
        opt = sub->add_option(flag_name(key.name), flag_values[key.name], key.help)
                  ->default_str(key.default_value);
      }
      options[std::string(name) + "/" + key.name] = opt;
    }
    subs.push_back(sub);
  }

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "mlfsic: " << e.what() << "\n";
    return 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    ConfigValues values;
    if (!config_file.empty()) {
      require_file("config", config_file);
      values = parse_config_text(read_file(config_file));
    }
    for (const auto& key : config_keys()) {
      const CLI::Option* opt = options.at(sub->get_name() + "/" + key.name);
      if (opt->count() == 0) continue;
      values[key.name] = key.is_flag ? "true" : flag_values[key.name];
    }
    const RunConfig config = resolve_config(values);
    const std::string& name = sub->get_name();
    if (name == "gen-synth") return cmd_gen_synth(config, out);
    if (name == "train") return cmd_train(config, out);
    if (name == "eval") return cmd_eval(config, out);
    if (name == "gradcheck") return cmd_gradcheck(config, out);
    if (name == "sample-episode") return cmd_sample_episode(config, out);
    return cmd_export_attention(config, out);
  } catch (const std::exception& e) {
    err << "mlfsic: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace mlfsic
