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

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "json.hpp"
#include "mlfsic/checkpoint.hpp"
#include "mlfsic/commands.hpp"
#include "mlfsic/config.hpp"
#include "mlfsic/errors.hpp"
#include "test_util.hpp"

namespace mlfsic {
namespace {

namespace fs = std::filesystem;

TEST(Config, Defaults) {
  const RunConfig c = resolve_config({});
  EXPECT_EQ(c.model.joint_dim, 512);
  EXPECT_EQ(c.model.heads, 8);
  EXPECT_EQ(c.model.lambda, 10.0);
  EXPECT_EQ(c.model.dropout, 0.1);
  EXPECT_EQ(c.training.epochs, 200);
  EXPECT_EQ(c.training.warmup_epochs, 10);
  EXPECT_EQ(c.training.base_lr, 1e-3);
  EXPECT_EQ(c.training.gamma, 1.0);
  EXPECT_EQ(c.training.queries_per_label, 4);
  EXPECT_TRUE(c.training.dropout);
  EXPECT_EQ(c.eval.episodes, 200);
  EXPECT_FALSE(c.eval.finetune);
  EXPECT_EQ(c.eval.finetune_epochs, 40);
  EXPECT_EQ(c.eval.pooling, ApPooling::kEpisode);
  EXPECT_EQ(c.eval_split, "test");
  EXPECT_EQ(c.gradcheck_tolerance, 1e-4);
  for (const auto& key : config_keys()) EXPECT_FALSE(key.help.empty()) << key.name;
}

TEST(Config, ParseText) {
  const ConfigValues v = parse_config_text("# comment\n\nheads = 4\n  dj=64  # trailing\n");
  EXPECT_EQ(v.at("heads"), "4");
  EXPECT_EQ(v.at("dj"), "64");
  try {
    parse_config_text("heads = 4\nbogus = 1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse_config_text("heads 4\n"), ConfigError);
}

TEST(Config, InvariantsNameTheKey) {
  try {
    resolve_config({{"heads", "6"}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("heads", 0), 0u) << e.what();
  }
  EXPECT_THROW(resolve_config({{"lr", "abc"}}), ConfigError);
  EXPECT_THROW(resolve_config({{"epochs", "3.5"}}), ConfigError);
  EXPECT_THROW(resolve_config({{"variant", "bilinear"}}), ConfigError);
  EXPECT_THROW(resolve_config({{"ap_pooling", "median"}}), ConfigError);
  EXPECT_NO_THROW(resolve_config({{"heads", "4"}, {"dj", "64"}}));
}

TEST(Config, TextRoundTrip) {
  const RunConfig c = resolve_config({{"gamma", "0"}, {"lr", "0.0003"}, {"lambda", "7.25"}});
  const std::string text = config_text(c);
  EXPECT_NE(text.find("gamma = 0\n"), std::string::npos);
  EXPECT_NE(text.find("lr = 0.0003\n"), std::string::npos);
  const RunConfig back = resolve_config(parse_config_text(text));
  EXPECT_EQ(config_text(back), text);
  EXPECT_EQ(back.training.gamma, 0.0);
  EXPECT_EQ(back.model.lambda, 7.25);
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mlfsic_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run_command(args, out_, err_);
  }

  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  void make_data() {
    ASSERT_EQ(run({"gen-synth", "--output-dir", p("data"), "--seed", "2",
                   "--synth-images-per-label", "12"}),
              0)
        << err_.str();
  }

  std::vector<std::string> small_train(const std::string& out) {
    return {"train",  "--data-dir", p("data"), "--output-dir", out, "--dj", "32", "--heads", "4",
            "--epochs", "2", "--warmup", "1", "--episodes-per-epoch", "3", "--seed", "5"};
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(Cli, HelpAndParseErrors) {
  EXPECT_EQ(run({"--help"}), 0);
  EXPECT_NE(out_.str().find("gradcheck"), std::string::npos);
  EXPECT_EQ(run({"train", "--no-such-flag", "1"}), 2);
  EXPECT_NE(err_.str().find("mlfsic:"), std::string::npos);
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"gradcheck", "--heads", "6", "--dj", "16"}), 1);
  EXPECT_NE(err_.str().find("heads"), std::string::npos);
}

TEST_F(Cli, Gradcheck) {
  EXPECT_EQ(run({"gradcheck", "--dj", "16", "--heads", "4", "--seed", "3"}), 0) << err_.str();
  EXPECT_EQ(out_.str().rfind("max_rel_err ", 0), 0u);
  EXPECT_NE(out_.str().find(" < "), std::string::npos);
  EXPECT_EQ(run({"gradcheck", "--dj", "16", "--heads", "4", "--gradcheck-tolerance", "1e-30"}), 1);
}

TEST_F(Cli, MissingFilesFailCleanly) {
  EXPECT_EQ(run({"train", "--data-dir", p("nowhere")}), 1);
  EXPECT_NE(err_.str().find("nowhere"), std::string::npos);
  EXPECT_EQ(run({"gradcheck", "--config", p("absent.txt")}), 1);
  make_data();
  EXPECT_EQ(run({"eval", "--data-dir", p("data"), "--checkpoint", p("none.mlck")}), 1);
}

TEST_F(Cli, GenSynthLayout) {
  make_data();
  for (const char* f : {"embeddings.txt", "splits.json", "annotations.jsonl", "train.mlfv",
                        "val.mlfv", "test.mlfv", "synth_config.txt"}) {
    EXPECT_TRUE(fs::exists(dir_ / "data" / f)) << f;
  }
  const std::string first = read_file(p("data/train.mlfv"));
  make_data();
  EXPECT_EQ(read_file(p("data/train.mlfv")), first);
}

TEST_F(Cli, ZeroEpochTrainStoresInitialParameters) {
  make_data();
  auto args = small_train(p("run"));
  args[10] = "0";  // --epochs
  ASSERT_EQ(run(args), 0) << err_.str();
  const Checkpoint ck = decode_checkpoint(read_file(p("run/model.mlck")));
  const RunConfig cfg = resolve_config(parse_config_text(ck.config_text));
  EXPECT_EQ(cfg.model.joint_dim, 32);
  const ModelConfig& mc = ck.params.config;
  EXPECT_EQ(mc.channels, 32);
  EXPECT_EQ(mc.word_dim, 16);
  const ModelParameters init = init_parameters(mc, 5);
  const auto a = tensor_views(ck.params);
  const auto b = tensor_views(init);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].values, b[k].values) << a[k].name;
  EXPECT_TRUE(fs::exists(dir_ / "run" / "loss.csv"));
}

TEST_F(Cli, TrainEvalAndRerunFromEmbeddedConfig) {
  make_data();
  ASSERT_EQ(run(small_train(p("run"))), 0) << err_.str();
  const std::string ckpt = read_file(p("run/model.mlck"));
  const std::string loss = read_file(p("run/loss.csv"));
  EXPECT_EQ(loss.rfind("# ", 0), 0u);

  // The echoed configuration reproduces the run byte for byte.
  const Checkpoint ck = decode_checkpoint(ckpt);
  write_file_atomic(p("echo.txt"), ck.config_text);
  ASSERT_EQ(run({"train", "--config", p("echo.txt")}), 0) << err_.str();
  EXPECT_EQ(testing::sha256(read_file(p("run/model.mlck"))), testing::sha256(ckpt));
  EXPECT_EQ(read_file(p("run/loss.csv")), loss);

  ASSERT_EQ(run({"eval", "--data-dir", p("data"), "--checkpoint", p("run/model.mlck"),
                 "--output-dir", p("run"), "--eval-episodes", "5", "--seed", "1"}),
            0)
      << err_.str();
  EXPECT_EQ(out_.str().rfind("micro_ap ", 0), 0u);
  EXPECT_NE(out_.str().find("over 5 episodes"), std::string::npos);
  EXPECT_EQ(testing::sha256(read_file(p("run/model.mlck"))), testing::sha256(ckpt));
  const std::string report = read_file(p("run/report.json"));
  const nlohmann::json doc = nlohmann::json::parse(report);
  EXPECT_EQ(doc["finetune"], false);
  EXPECT_EQ(doc["episodes"], 5);
  EXPECT_EQ(doc["config"]["dj"], "32");
  ASSERT_EQ(run({"eval", "--data-dir", p("data"), "--checkpoint", p("run/model.mlck"),
                 "--output-dir", p("run"), "--eval-episodes", "5", "--seed", "1"}),
            0);
  EXPECT_EQ(read_file(p("run/report.json")), report);

  ASSERT_EQ(run({"eval", "--data-dir", p("data"), "--checkpoint", p("run/model.mlck"),
                 "--report", p("ft.json"), "--eval-episodes", "2", "--finetune",
                 "--finetune-epochs", "2"}),
            0)
      << err_.str();
  EXPECT_EQ(nlohmann::json::parse(read_file(p("ft.json")))["finetune"], true);

  ASSERT_EQ(run({"export-attention", "--data-dir", p("data"), "--checkpoint",
                 p("run/model.mlck"), "--output-dir", p("run")}),
            0)
      << err_.str();
  const nlohmann::json att = nlohmann::json::parse(read_file(p("run/attention.json")));
  ASSERT_EQ(att["labels"].size(), 8u);
  const auto& first = att["labels"][0];
  EXPECT_EQ(first["heads"].size(), 4u);
  double total = 0.0;
  for (const auto& img : first["summed"])
    for (const auto& row : img["grid"])
      for (const auto& v : row) total += v.get<double>();
  EXPECT_NEAR(total, 4.0, 1e-9);
  EXPECT_EQ(run({"export-attention", "--data-dir", p("data"), "--checkpoint",
                 p("run/model.mlck"), "--variant", "simple_global"}),
            1);
}

TEST_F(Cli, SampleEpisodeManifest) {
  make_data();
  ASSERT_EQ(run({"sample-episode", "--data-dir", p("data"), "--seed", "4"}), 0) << err_.str();
  const std::string first = out_.str();
  const nlohmann::json j = nlohmann::json::parse(first);
  EXPECT_EQ(j["split"], "test");
  EXPECT_EQ(j["labels"].size(), 8u);
  EXPECT_EQ(j["support"].size(), 8u);
  EXPECT_EQ(j["query"].size(), 32u);
  ASSERT_EQ(run({"sample-episode", "--data-dir", p("data"), "--seed", "4"}), 0);
  EXPECT_EQ(out_.str(), first);
  ASSERT_EQ(run({"sample-episode", "--data-dir", p("data"), "--seed", "5"}), 0);
  EXPECT_NE(out_.str(), first);
}

}  // namespace
}  // namespace mlfsic
