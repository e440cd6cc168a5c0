/* Copyright 2026 The fpmkit Authors. All Rights Reserved.

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

#include <fstream>

#include "../support/fixtures.hpp"
#include "fpm/cli/app.hpp"

namespace fpm {
namespace {

using nlohmann::json;
using testing::file_bytes;
using testing::run_cli;
using testing::TempDir;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override { testing::write_digit_dataset(dir_, 6); }

  std::vector<std::string> simulate_args(const std::string& out) const {
    return {"simulate", "--input", dir_ / "images.idx", "--labels", dir_ / "labels.idx",
            "--grid-side", "5", "--radius", "5", "--out", out};
  }

  std::string simulate(const std::string& name, std::vector<std::string> extra = {}) {
    auto args = simulate_args(dir_ / name);
    args.insert(args.end(), extra.begin(), extra.end());
    const auto r = run_cli(args);
    EXPECT_EQ(r.code, 0) << r.out;
    return dir_ / name;
  }

  TempDir dir_;
};

TEST_F(CliTest, SimulateWritesTwentyFiveChannels) {
  const auto r = run_cli(simulate_args(dir_ / "s.fpms"));
  ASSERT_EQ(r.code, 0);
  const json summary = json::parse(r.out);
  EXPECT_EQ(summary["count"], 6);
  EXPECT_EQ(summary["channels"], 25);
  EXPECT_EQ(summary["height"], 28);
  EXPECT_TRUE(summary.contains("elapsed_s"));
  const StackContainer c = read_stack(dir_ / "s.fpms");
  EXPECT_EQ(c.channels(), 25);
  EXPECT_EQ(c.count(), 6);
  EXPECT_EQ(c.metadata().labels, (std::vector<int>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(c.metadata().ids[2], "images.idx:000002");
  EXPECT_FALSE(c.on_axis_only());
}

TEST_F(CliTest, SimulatedChannelsMatchTheLibrary) {
  const StackContainer c = read_stack(simulate("s.fpms"));
  const auto records = parse_idx(dir_ / "images.idx");
  const auto expected = forward_stack(records[3].image(), LedGrid(5, 5, 5), NoiseSpec::none());
  for (int k = 0; k < 25; ++k) {
    const RealImage got = c.channel(3, k);
    for (std::size_t i = 0; i < got.size(); ++i) {
      ASSERT_EQ(got[i], static_cast<double>(static_cast<float>(expected.channels[k][i])));
    }
  }
}

TEST_F(CliTest, SingleLedGridGivesOnAxisContainer) {
  const StackContainer c = read_stack(simulate("cc.fpms", {"--grid-side", "1"}));
  EXPECT_EQ(c.channels(), 1);
  EXPECT_TRUE(c.on_axis_only());
}

TEST_F(CliTest, IdentityWeightsMatchPlainSimulationBitwise) {
  ASSERT_EQ(run_cli({"multiplex", "identity", "--k", "25", "--out", dir_ / "id25.json"}).code, 0);
  const auto plain = read_stack(simulate("plain.fpms"));
  const auto mux = read_stack(simulate("mux.fpms", {"--weights", dir_ / "id25.json"}));
  EXPECT_EQ(mux.payload(), plain.payload());
  EXPECT_TRUE(mux.metadata().multiplex.has_value());
}

TEST_F(CliTest, RandomWeightsGiveMChannels) {
  ASSERT_EQ(run_cli({"multiplex", "random", "--k", "25", "--m", "10", "--seed", "3", "--out",
                     dir_ / "w.json"}).code, 0);
  const auto c = read_stack(simulate("m.fpms", {"--weights", dir_ / "w.json"}));
  EXPECT_EQ(c.channels(), 10);
  EXPECT_EQ(c.flags(), kFlagMultiplexed);
  // Weights sized for another grid are a configuration error.
  auto args = simulate_args(dir_ / "bad.fpms");
  args.insert(args.end(), {"--grid-side", "3", "--weights", dir_ / "w.json"});
  EXPECT_EQ(run_cli(args).code, 2);
}

TEST_F(CliTest, ReconstructMissingStackIsIoError) {
  EXPECT_EQ(run_cli({"reconstruct", "--input", dir_ / "nope.fpms", "--out", dir_ / "r.fpms"}).code, 3);
}

TEST_F(CliTest, ReconstructSingleIterationTrace) {
  const auto stack = simulate("s.fpms", {"--gt-out", dir_ / "gt.fpms"});
  const auto r = run_cli({"reconstruct", "--input", stack, "--ground-truth", dir_ / "gt.fpms",
                          "--iters", "1", "--trace", "--out", dir_ / "r.fpms"});
  ASSERT_EQ(r.code, 0) << r.out;
  const json m = json::parse(r.out);
  ASSERT_EQ(m["records"].size(), 6u);
  for (const auto& rec : m["records"]) {
    EXPECT_EQ(rec["energy_trace"].size(), 1u);
    EXPECT_EQ(rec["iterations"], 1);
    EXPECT_TRUE(rec.contains("psnr"));
  }
  EXPECT_EQ(m["aggregate"]["count"], 6);
  const StackContainer est = read_stack(dir_ / "r.fpms");
  EXPECT_EQ(est.metadata().kind, ContainerKind::reconstruction);
  EXPECT_EQ(est.channels(), 1);
  EXPECT_EQ(est.count(), 6);
}

TEST_F(CliTest, ReconstructionImprovesOnTheInitialEstimate) {
  const auto stack = simulate("s.fpms", {"--gt-out", dir_ / "gt.fpms", "--radius", "6"});
  auto psnr_after = [&](const std::string& iters) {
    const auto r = run_cli({"reconstruct", "--input", stack, "--ground-truth", dir_ / "gt.fpms",
                            "--iters", iters, "--alpha", "0", "--fidelity", "l2", "--limit", "2",
                            "--out", dir_ / "r.fpms"});
    EXPECT_EQ(r.code, 0);
    return json::parse(r.out)["aggregate"]["mean_psnr"].get<double>();
  };
  EXPECT_GT(psnr_after("200"), psnr_after("1") + 10.0);
}

TEST_F(CliTest, ReconstructRejectsBadSettings) {
  const auto stack = simulate("s.fpms");
  EXPECT_EQ(run_cli({"reconstruct", "--input", stack, "--iters", "0", "--out", dir_ / "r.fpms"}).code, 2);
  EXPECT_EQ(run_cli({"reconstruct", "--input", stack, "--fidelity", "huber", "--out", dir_ / "r.fpms"}).code, 2);
  EXPECT_EQ(run_cli({"reconstruct", "--input", stack, "--alpha", "-1", "--out", dir_ / "r.fpms"}).code, 2);
}

TEST_F(CliTest, EvaluateIdenticalInputsIsInfinite) {
  simulate("s.fpms", {"--gt-out", dir_ / "gt.fpms"});
  const auto r = run_cli({"evaluate", "--input", dir_ / "gt.fpms", "--ground-truth", dir_ / "gt.fpms"});
  ASSERT_EQ(r.code, 0);
  const json m = json::parse(r.out);
  EXPECT_EQ(m["aggregate"]["mean_psnr"], "inf");
  for (const auto& rec : m["records"]) {
    EXPECT_EQ(rec["psnr"], "inf");
    EXPECT_EQ(rec["mse"], 0.0);
  }
}

TEST_F(CliTest, EvaluateMatchesThePsnrOperation) {
  simulate("s.fpms", {"--gt-out", dir_ / "gt.fpms"});
  run_cli({"reconstruct", "--input", dir_ / "s.fpms", "--iters", "3", "--out", dir_ / "r.fpms"});
  const auto r = run_cli({"evaluate", "--input", dir_ / "r.fpms", "--ground-truth", dir_ / "gt.fpms"});
  ASSERT_EQ(r.code, 0);
  const json m = json::parse(r.out);
  const StackContainer est = read_stack(dir_ / "r.fpms");
  const StackContainer gt = read_stack(dir_ / "gt.fpms");
  for (int i = 0; i < est.count(); ++i) {
    EXPECT_NEAR(m["records"][i]["psnr"].get<double>(), psnr(est.channel(i, 0), gt.channel(i, 0)), 1e-9);
  }
}

TEST_F(CliTest, EvaluateMismatchedIdsIsConfigError) {
  simulate("s.fpms", {"--gt-out", dir_ / "gt.fpms"});
  TempDir other;
  testing::write_digit_dataset(other, 3);
  // Same ids come from the file name, so rename to change them.
  std::filesystem::rename(other / "images.idx", other / "other.idx");
  ASSERT_EQ(run_cli({"simulate", "--input", other / "other.idx", "--out", other / "o.fpms",
                     "--gt-out", other / "ogt.fpms"}).code, 0);
  EXPECT_EQ(run_cli({"evaluate", "--input", other / "ogt.fpms", "--ground-truth", dir_ / "gt.fpms"}).code, 2);
  // Shape mismatch: measurement stack vs single-channel ground truth.
  EXPECT_EQ(run_cli({"evaluate", "--input", dir_ / "s.fpms", "--ground-truth", dir_ / "gt.fpms"}).code, 2);
}

TEST_F(CliTest, InspectWritesRasters) {
  const auto stack = simulate("s.fpms");
  const auto r = run_cli({"inspect", "--input", stack, "--index", "2", "--scale", "1", "--out", dir_ / "viz"});
  ASSERT_EQ(r.code, 0) << r.out;
  const json doc = json::parse(r.out);
  EXPECT_EQ(doc["sheet_columns"], 5);
  EXPECT_EQ(doc["sheet_rows"], 5);
  ASSERT_EQ(doc["masks"].size(), 25u);
  EXPECT_EQ(doc["masks"][12]["center"], json::array({0, 0}));
  EXPECT_EQ(doc["masks"][12]["popcount"], 81);
  EXPECT_EQ(doc["masks"][0]["popcount"], 79);
  const auto sheet = file_bytes(dir_ / "viz/measurements.pgm");
  const std::string header = "P5\n144 144\n255\n";
  EXPECT_EQ(std::string(sheet.begin(), sheet.begin() + static_cast<std::ptrdiff_t>(header.size())), header);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "viz/mask_layout.pgm"));
}

TEST_F(CliTest, InspectIndexOutOfRange) {
  const auto stack = simulate("s.fpms");
  EXPECT_EQ(run_cli({"inspect", "--input", stack, "--index", "6", "--out", dir_ / "viz"}).code, 2);
  EXPECT_EQ(run_cli({"inspect", "--input", stack, "--index", "-1", "--out", dir_ / "viz"}).code, 2);
}

TEST_F(CliTest, MultiplexSubcommands) {
  auto r = run_cli({"multiplex", "random", "--k", "9", "--m", "3", "--seed", "5"});
  ASSERT_EQ(r.code, 0);
  const MultiplexMatrix printed = multiplex_from_json(json::parse(r.out));
  EXPECT_EQ(printed, group_multiplex(9, 3, 5));

  std::ofstream(dir_ / "w.json") << R"({"m":1,"k":3,"weights":[0.5,2.0,1.0]})";
  r = run_cli({"multiplex", "validate", "--input", dir_ / "w.json"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out)["valid"], true);
  r = run_cli({"multiplex", "normalize", "--input", dir_ / "w.json"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(json::parse(r.out)["weights"], json::array({0.25, 1.0, 0.5}));

  std::ofstream(dir_ / "neg.json") << R"({"m":1,"k":2,"weights":[0.5,-1]})";
  EXPECT_EQ(run_cli({"multiplex", "validate", "--input", dir_ / "neg.json"}).code, 2);
  EXPECT_EQ(run_cli({"multiplex", "validate", "--input", dir_ / "absent.json"}).code, 3);
  EXPECT_EQ(run_cli({"multiplex", "random", "--k", "5", "--m", "6"}).code, 2);
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  std::ofstream(dir_ / "exp.toml") << "[simulate]\ngrid-side = 3\nradius = 4\nnoise = 0.01\nseed = 7\n"
                                    << "[reconstruct]\niters = 2\n";
  const auto r = run_cli({"simulate", "--config", dir_ / "exp.toml", "--input", dir_ / "images.idx",
                          "--radius", "6", "--out", dir_ / "c.fpms"});
  ASSERT_EQ(r.code, 0) << r.out;
  const StackContainer c = read_stack(dir_ / "c.fpms");
  EXPECT_EQ(c.channels(), 9);
  EXPECT_EQ(c.metadata().grid->radius(), 6);
  EXPECT_EQ(c.metadata().noise.sigma, 0.01);
  EXPECT_EQ(c.metadata().noise.seed, 7u);

  const auto rec = run_cli({"reconstruct", "--input", dir_ / "c.fpms", "--config", dir_ / "exp.toml",
                            "--trace", "--out", dir_ / "r.fpms"});
  ASSERT_EQ(rec.code, 0);
  EXPECT_EQ(json::parse(rec.out)["records"][0]["energy_trace"].size(), 2u);
  EXPECT_EQ(run_cli({"simulate", "--config", dir_ / "none.toml", "--input", dir_ / "images.idx",
                     "--out", dir_ / "c.fpms"}).code, 2);
}

TEST_F(CliTest, DeterministicAcrossRunsAndJobs) {
  const std::vector<std::string> noisy = {"--noise", "0.05", "--seed", "42"};
  auto with_jobs = [&](const std::string& name, const std::string& jobs) {
    auto extra = noisy;
    extra.insert(extra.end(), {"--jobs", jobs});
    return file_bytes(simulate(name, extra));
  };
  const auto a = with_jobs("a.fpms", "1");
  EXPECT_EQ(with_jobs("b.fpms", "1"), a);
  EXPECT_EQ(with_jobs("c.fpms", "4"), a);
  EXPECT_NE(file_bytes(simulate("d.fpms", {"--noise", "0.05", "--seed", "43"})), a);
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
  auto args = simulate_args(dir_ / "x.fpms");
  args.insert(args.end(), {"--grid-side", "4"});
  EXPECT_EQ(run_cli(args).code, 2);
  args = simulate_args(dir_ / "x.fpms");
  args.insert(args.end(), {"--spacing", "20"});  // pupils miss the 28x28 spectrum
  EXPECT_EQ(run_cli(args).code, 2);
  EXPECT_EQ(run_cli({"simulate", "--input", dir_ / "images.idx"}).code, 2);  // no --out
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"simulate", "--input", dir_ / "images.idx", "--out", dir_ / "x.fpms", "--jobs", "x"}).code, 2);
}

TEST_F(CliTest, CorruptedContainerExitsThree) {
  const auto stack = simulate("s.fpms");
  auto bytes = file_bytes(stack);
  bytes[0] = 'Q';
  testing::write_bytes(dir_ / "bad.fpms", bytes);
  EXPECT_EQ(run_cli({"reconstruct", "--input", dir_ / "bad.fpms", "--out", dir_ / "r.fpms"}).code, 3);
  EXPECT_EQ(run_cli({"inspect", "--input", dir_ / "bad.fpms", "--out", dir_ / "viz"}).code, 3);
}

TEST_F(CliTest, ImageDirectoryInput) {
  TempDir tree;
  for (const char* cls : {"cat", "dog"}) {
    std::filesystem::create_directories(tree.path() / cls);
    const auto digits = testing::quantized_digits(2);
    for (int i = 0; i < 2; ++i) {
      GrayImage g(digits[static_cast<std::size_t>(i)].extent());
      for (std::size_t p = 0; p < g.size(); ++p) g[p] = static_cast<std::uint8_t>(std::lround(digits[i][p] * 255));
      write_pgm(g, tree.path() / cls / ("img" + std::to_string(i) + ".pgm"));
    }
  }
  const auto r = run_cli({"simulate", "--input", tree.path().string(), "--size", "32", "--grid-side",
                          "3", "--radius", "6", "--out", dir_ / "dir.fpms"});
  ASSERT_EQ(r.code, 0) << r.out;
  const StackContainer c = read_stack(dir_ / "dir.fpms");
  EXPECT_EQ(c.extent(), (Extent{32, 32}));
  EXPECT_EQ(c.metadata().labels, (std::vector<int>{0, 0, 1, 1}));
  EXPECT_EQ(c.metadata().ids[2], "dog/img0.pgm");
  const auto rgb = run_cli({"simulate", "--input", tree.path().string(), "--size", "32", "--grid-side",
                            "3", "--radius", "6", "--color", "rgb", "--out", dir_ / "rgb.fpms"});
  ASSERT_EQ(rgb.code, 0);
  EXPECT_EQ(read_stack(dir_ / "rgb.fpms").channels(), 27);
}

TEST_F(CliTest, HelpExitsZero) {
  const auto r = run_cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("simulate"), std::string::npos);
  EXPECT_NE(run_cli({"simulate", "--help"}).out.find("--grid-side"), std::string::npos);
}

}  // namespace
}  // namespace fpm
