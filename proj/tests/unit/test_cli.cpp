// Copyright 2026 The ctcocr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "ctcocr/cli.hpp"
#include "ctcocr/config.hpp"
#include "ctcocr/error.hpp"
#include "ctcocr/train.hpp"

namespace ctcocr {
namespace {

namespace fs = std::filesystem;

struct Invocation {
  int code;
  std::string out, err;
};

Invocation run(std::vector<std::string> args) {
  args.insert(args.begin(), "ctcocr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           ("ctcocr_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& leaf) const { return (dir_ / leaf).string(); }
  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Config, ParsesKeyValueLines) {
  const auto kv = parse_config_text("# comment\nseed = 3\n\n  train.epochs=5  # trailing\n", "t");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0], std::make_pair(std::string("seed"), std::string("3")));
  EXPECT_EQ(kv[1], std::make_pair(std::string("train.epochs"), std::string("5")));
  EXPECT_THROW(parse_config_text("no equals sign\n", "t"), ConfigError);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  CliConfig c;
  EXPECT_THROW(c.set("train.epoch", "3"), ConfigError);
  EXPECT_THROW(c.set("train.epochs", "three"), ConfigError);
  EXPECT_THROW(c.set("train.learning_rate", "1e-3x"), ConfigError);
  try {
    c.set("model.bogus", "1");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("model.bogus"), std::string::npos);
  }
}

TEST(Config, EntriesRoundTrip) {
  CliConfig a;
  a.set("seed", "9");
  a.set("train.epochs", "4");
  a.set("train.learning_rate", "0.0025");
  a.set("eval.decoder", "beam");
  a.set("augment.rotation_degrees", "-3,3");
  a.finalize();
  CliConfig b;
  for (const auto& [k, v] : parse_config_text(format_config(a), "round trip")) b.set(k, v);
  b.finalize();
  EXPECT_EQ(format_config(a), format_config(b));
  EXPECT_EQ(b.train.seed, 9u);
  EXPECT_EQ(b.split.seed, 9u);
  EXPECT_EQ(b.train.epochs, 4);
}

TEST_F(CliTest, NoSubcommandIsUsageError) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"train", "--no-such-flag"}).code, kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST_F(CliTest, SynthesizeWritesCorpusAndManifest) {
  const Invocation r = run({"synthesize", "--count", "12", "--seed", "4", "--out", path("a")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::size_t pngs = 0;
  for (const auto& e : fs::directory_iterator(dir_ / "a")) pngs += e.path().extension() == ".png";
  EXPECT_EQ(pngs, 12u);
  const std::string manifest = slurp(dir_ / "a" / "manifest.tsv");
  EXPECT_EQ(manifest.rfind("source_id\tlabel\tstyle_seed\n", 0), 0u);
  EXPECT_EQ(std::count(manifest.begin(), manifest.end(), '\n'), 13);
  EXPECT_TRUE(fs::exists(dir_ / "a" / "resolved_config"));

  ASSERT_EQ(run({"synthesize", "--count", "12", "--seed", "4", "--out", path("b")}).code, kExitOk);
  EXPECT_EQ(manifest, slurp(dir_ / "b" / "manifest.tsv"));

  const Invocation zero = run({"synthesize", "--count", "0", "--out", path("z")});
  EXPECT_EQ(zero.code, kExitOk);
  EXPECT_EQ(slurp(dir_ / "z" / "manifest.tsv"), "source_id\tlabel\tstyle_seed\n");
}

TEST_F(CliTest, PrecedenceDefaultsFileSetFlag) {
  {
    std::ofstream cfg(dir_ / "c.cfg");
    cfg << "data.min_length = 3\ndata.max_length = 3\nseed = 1\n";
  }
  const Invocation r = run({"synthesize", "--config", path("c.cfg"), "--set", "data.max_length=5",
                     "--max-length", "4", "--count", "3", "--out", path("o")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string resolved = slurp(dir_ / "o" / "resolved_config");
  EXPECT_NE(resolved.find("data.min_length = 3\n"), std::string::npos) << resolved;
  EXPECT_NE(resolved.find("data.max_length = 4\n"), std::string::npos) << resolved;
  EXPECT_NE(resolved.find("seed = 1\n"), std::string::npos) << resolved;
}

TEST_F(CliTest, ConfigErrorsExitOne) {
  EXPECT_EQ(run({"train", "--synthetic", "10", "--epochs", "0", "--out", path("o")}).code, kExitUsage);
  EXPECT_EQ(run({"train", "--config", path("missing.cfg")}).code, kExitUsage);
  EXPECT_EQ(run({"synthesize", "--set", "nonsense"}).code, kExitUsage);
}

TEST_F(CliTest, MissingCheckpointIsDataErrorWithoutOutputs) {
  const Invocation r = run({"eval", "--synthetic", "10", "--checkpoint", path("nope.ckpt"), "--out",
                     path("eval_out")});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_FALSE(fs::exists(dir_ / "eval_out" / "eval.json"));
  EXPECT_FALSE(fs::exists(dir_ / "eval_out" / "eval_details.tsv"));
}

TEST_F(CliTest, PredictWithoutImagesIsUsageError) {
  EXPECT_EQ(run({"predict", "--checkpoint", path("x.ckpt")}).code, kExitUsage);
}

TEST_F(CliTest, TrainEvalPredictFlow) {
  ASSERT_EQ(run({"synthesize", "--count", "30", "--seed", "2", "--out", path("data")}).code, kExitOk);
  const Invocation t = run({"train", "--data", path("data"), "--epochs", "2", "--batch-size", "8",
                     "--seed", "2", "--out", path("run")});
  ASSERT_EQ(t.code, kExitOk) << t.err;
  EXPECT_NE(t.out.find("test char_accuracy"), std::string::npos);
  EXPECT_EQ(read_metrics(dir_ / "run" / kMetricsName).size(), 2u);
  EXPECT_EQ(slurp(dir_ / "run" / kMetricsName).rfind(
                "epoch,train_loss,val_loss,val_char_acc,val_word_acc,seconds\n", 0),
            0u);

  const Invocation e = run({"eval", "--data", path("data"), "--seed", "2", "--checkpoint",
                     path("run/model.ckpt"), "--out", path("eval"), "--decoder", "beam"});
  ASSERT_EQ(e.code, kExitOk) << e.err;
  EXPECT_TRUE(fs::exists(dir_ / "eval" / "eval.json"));
  EXPECT_NE(slurp(dir_ / "eval" / "eval.json").find("\"decoder\": \"beam"), std::string::npos);

  // Resume past the last epoch is a no-op that still succeeds.
  const Invocation again = run({"train", "--data", path("data"), "--epochs", "3", "--batch-size", "8",
                         "--seed", "2", "--out", path("run"), "--resume"});
  ASSERT_EQ(again.code, kExitOk) << again.err;
  EXPECT_EQ(read_metrics(dir_ / "run" / kMetricsName).size(), 3u);

  std::string image;
  for (const auto& f : fs::directory_iterator(dir_ / "data")) {
    if (f.path().extension() == ".png") image = f.path().string();
  }
  {
    std::ofstream junk(dir_ / "junk.png");
    junk << "not an image";
  }
  const Invocation p = run({"predict", "--checkpoint", path("run/model.ckpt"), image});
  ASSERT_EQ(p.code, kExitOk) << p.err;
  EXPECT_EQ(p.out.rfind(image + "\t", 0), 0u);

  const Invocation mixed = run({"predict", "--checkpoint", path("run/model.ckpt"), image, path("junk.png")});
  EXPECT_EQ(mixed.code, kExitData);
  EXPECT_NE(mixed.out.find(image + "\t"), std::string::npos);
  EXPECT_NE(mixed.err.find("junk.png"), std::string::npos);

  // Foreign characters in the labels are named.
  fs::create_directories(dir_ / "foreign");
  fs::copy_file(image, dir_ / "foreign" / "2bzq.png");
  const Invocation f = run({"eval", "--data", path("foreign"), "--split", "all", "--checkpoint",
                     path("run/model.ckpt"), "--out", path("eval2")});
  EXPECT_EQ(f.code, kExitData);
  EXPECT_NE(f.err.find("qz"), std::string::npos) << f.err;
}

TEST_F(CliTest, CorruptCheckpointIsDataError) {
  {
    std::ofstream bad(dir_ / "bad.ckpt");
    bad << "CTCOCR garbage";
  }
  EXPECT_EQ(run({"eval", "--synthetic", "4", "--checkpoint", path("bad.ckpt")}).code, kExitData);
}

}  // namespace
}  // namespace ctcocr
