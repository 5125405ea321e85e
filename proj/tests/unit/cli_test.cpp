#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "adlabel/error.hpp"
#include "adlabel/raster.hpp"
#include "adlabel/synth.hpp"
#include "cli.hpp"
#include "fixtures.hpp"
#include "run_config.hpp"

namespace adlabel {
using cli::RunConfig;
using cli::run_config_from_json;
using cli::run_config_to_json;
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path write_config(const fs::path& dir, const std::string& json) {
  const auto p = dir / "c.json";
  std::ofstream(p) << json;
  return p;
}

constexpr const char* kSmallRun = R"({
  "generation": {"n_posts": 40, "seed": 3},
  "model": {"backbone_blocks": [{"filters": 4, "kernel_size": 3, "stride": 2},
                                {"filters": 8, "kernel_size": 3, "stride": 2}]},
  "train": {"max_epochs_per_stage": 2, "patience": [1, 1, 1], "batch_size": 16}
})";

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"evaluate", "--split", "holdout"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"check"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);
}

TEST(Cli, UnknownConfigKeyRejected) {
  testing::TempDir dir("cli");
  const auto cfg = write_config(dir.path(), R"({"train": {"batchsize": 8}})");
  const auto r = run_cli({"generate", "--config", cfg.string(), "--out", (dir.path() / "c").string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("train.batchsize"), std::string::npos) << r.err;
  EXPECT_THROW(run_config_from_json(R"({"extra": 1})"), ConfigError);
}

TEST(Cli, MissingInputNamesPathAndExitsTwo) {
  testing::TempDir dir("cli");
  const auto missing = (dir.path() / "nowhere").string();
  const auto r = run_cli({"split", "--corpus", missing});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_NE(r.err.find("nowhere"), std::string::npos) << r.err;
  EXPECT_EQ(r.err.find("terminate"), std::string::npos);
}

TEST(Cli, CheckAbsentImage) {
  testing::TempDir dir("cli");
  SpecOptions opt;
  opt.width = opt.height = 256;
  Rng rng(4);
  const auto img = dir.path() / "absent.ppm";
  write_ppm(img, render_image(sample_spec(rng, Scenario::kAbsent, true, opt)));
  const auto r = run_cli({"check", "--image", img.string(), "--out", dir.path().string()});
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  EXPECT_NE(r.out.find("\"status\": \"Absent\""), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir.path() / "verdict.json"));
}

TEST(Cli, ResolvedConfigEchoesSeeds) {
  const auto json = run_config_to_json(RunConfig{}, 2);
  const auto back = run_config_from_json(json);
  EXPECT_EQ(run_config_to_json(back, 2), json);
  EXPECT_NE(json.find("\"split\""), std::string::npos);
  std::size_t seeds = 0;
  for (auto p = json.find("\"seed\""); p != std::string::npos; p = json.find("\"seed\"", p + 1)) ++seeds;
  EXPECT_EQ(seeds, 3u);
}

TEST(Cli, SmallPipelineEndToEnd) {
  testing::TempDir dir("cli");
  const auto root = dir.path();
  const auto cfg = write_config(root, kSmallRun).string();
  auto r = run_cli({"generate", "--config", cfg, "--out", (root / "corpus").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("\"n_posts\": 40"), std::string::npos);
  r = run_cli({"split", "--config", cfg, "--corpus", (root / "corpus").string(), "--out", (root / "split").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(root / "split" / "split.json"));
  std::string digests[2];
  for (int k = 0; k < 2; ++k) {
    const auto model = (root / ("model" + std::to_string(k))).string();
    r = run_cli({"train", "--config", cfg, "--corpus", (root / "split").string(), "--out", model, "--seed", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto at = r.out.find("digest ");
    ASSERT_NE(at, std::string::npos) << r.out;
    digests[k] = r.out.substr(at);
  }
  EXPECT_EQ(digests[0], digests[1]);
  r = run_cli({"evaluate", "--corpus", (root / "split").string(), "--model", (root / "model0").string(), "--split",
               "test"});
  ASSERT_EQ(r.code, 0) << r.err;
  int lines = 0;
  for (char c : r.out) lines += c == '\n';
  EXPECT_EQ(lines, 3) << r.out;
  EXPECT_NE(r.out.find("compliant_label: "), std::string::npos);
  EXPECT_TRUE(fs::exists(root / "model0" / "report.json"));
  r = run_cli({"predict", "--corpus", (root / "split").string(), "--model", (root / "model0").string(), "--split",
               "val", "--out", root.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(root / "predictions.json"));
  r = run_cli({"report", "--corpus", (root / "split").string(), "--source", "ground_truth"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(root / "split" / "audit.json"));
}

}  // namespace
}  // namespace adlabel
