// Copyright 2026 The rotdet Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI through the shell; stderr is merged into `out` when asked.
Result run(const std::string& args, bool merge_stderr = false, const std::string& stdin_text = "") {
  std::string cmd = std::string(ROTDET_CLI) + " " + args;
  if (!stdin_text.empty()) cmd = "printf '" + stdin_text + "' | " + cmd;
  cmd += merge_stderr ? " 2>&1" : " 2>/dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string data(const std::string& rel) { return std::string(ROTDET_DATA_DIR) + "/" + rel; }

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rotdet_cli_" + name);
  fs::remove_all(p);
  return p;
}

TEST(CliIou, FixturePairs) {
  const Result r = run("iou " + data("iou_pairs.txt"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "1.000000\n0.000000\n0.707107\n0.111111\n");
}

TEST(CliIou, RadiansAndStdin) {
  const Result r = run("iou --radians -", false, "0 0 1 1 -0.7853981633974483 0 0 1 1 0\\n");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "0.707107\n");
}

TEST(CliIou, ParseErrorNamesLine) {
  const Result r = run("iou -", true, "0 0 1 1 0 0 0 1 1 0\\n0 0 1 x 0 0 0 1 1 0\\n");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("<stdin>:2:"), std::string::npos) << r.out;
}

TEST(CliEval, PerfectSyntheticDataset) {
  const fs::path out = scratch("perfect");
  for (const char* task : {"obb", "hbb"}) {
    const Result r = run("eval --gt " + data("synthetic/gt") + " --det " + data("synthetic/det") + " --task " + task +
                         " --out-dir " + out.string());
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(slurp(out / "report.json"));
    EXPECT_EQ(j["map"].get<double>(), 1.0);  // exactly
    EXPECT_EQ(j["config"]["task"], task);
    EXPECT_EQ(j["config"]["compatibility"], "devkit-compatible");
    EXPECT_EQ(j["classes"].size(), 4u);
    EXPECT_EQ(slurp(out / "report.txt"), r.out);
  }
}

TEST(CliEval, MicroCase) {
  const fs::path out = scratch("micro");
  Result r = run("eval --gt " + data("micro/gt") + " --det " + data("micro/det") + " --out-dir " + out.string());
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(nlohmann::json::parse(slurp(out / "report.json"))["map"].get<double>(), 0.8485, 1e-4);
  EXPECT_NE(r.out.find("0.848485"), std::string::npos);
  r = run("eval --metric continuous --gt " + data("micro/gt") + " --det " + data("micro/det"));
  EXPECT_NE(r.out.find("0.833333"), std::string::npos);
}

TEST(CliEval, MissingClassFile) {
  const Result r = run("eval --gt " + data("micro/gt") + " --det " + data("micro/det") + " --classes plane,ship", true);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("Task1_ship.txt"), std::string::npos) << r.out;
}

TEST(CliEval, BadFlagsAreValidationErrors) {
  EXPECT_EQ(run("eval --gt x --det y --metric coco").code, 2);
  EXPECT_EQ(run("eval --gt x --det y --iou-thresh 1.5").code, 2);
  EXPECT_EQ(run("eval --gt /nonexistent --det /nonexistent").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
}

TEST(CliEval, DeterministicAcrossRunsAndJobs) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  ASSERT_EQ(run("eval --gt " + data("synthetic/gt") + " --det " + data("synthetic/det") + " --out-dir " + a.string()).code, 0);
  ASSERT_EQ(run("eval --jobs 4 --gt " + data("synthetic/gt") + " --det " + data("synthetic/det") + " --out-dir " +
                b.string())
                .code,
            0);
  EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
  EXPECT_EQ(slurp(a / "report.txt"), slurp(b / "report.txt"));
}

TEST(CliAnchors, DefaultSweepIncludesStride6AndDecreases) {
  const Result r = run("anchors");
  ASSERT_EQ(r.code, 0);
  const auto l = lines(r.out);
  ASSERT_EQ(l.size(), 8u);
  EXPECT_EQ(l[0], "stride,emo");
  EXPECT_EQ(l[2].substr(0, 9), "6.000000,");
  double prev = 2.0;
  for (std::size_t i = 1; i < l.size(); ++i) {
    const double v = std::stod(l[i].substr(l[i].find(',') + 1));
    EXPECT_LE(v, prev);
    prev = v;
  }
}

TEST(CliAnchors, SingleStrideAndDump) {
  EXPECT_EQ(lines(run("anchors --strides 8").out).size(), 2u);
  const fs::path dump = scratch("anchors.csv");
  const Result r = run("anchors --strides 8,16 --dump " + dump.string() + " --grid 2 3");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(lines(slurp(dump)).size(), 1u + 2 * 3 * 48);
}

TEST(CliTile, FourWindows) {
  const Result r = run("tile 1000 1000 800 200");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "0 0 800 800\n200 0 1000 800\n0 200 800 1000\n200 200 1000 1000\n");
  EXPECT_EQ(run("tile 1000 1000 800 800").code, 2);
}

TEST(CliNms, GreedyExample) {
  const Result r = run("nms --thresh 0.5 -", false,
                       "0 2.5 10 12.5 0.8\\n50 50 60 60 0.7\\n0 0 10 10 0.9\\n");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "0.000000 0.000000 10.000000 10.000000 0.900000\n50.000000 50.000000 60.000000 60.000000 0.700000\n");
}

TEST(CliRnms, CrossingBoxes) {
  EXPECT_EQ(lines(run("rnms --thresh 0.1 " + data("rnms_cross.txt")).out).size(), 1u);
  EXPECT_EQ(lines(run("rnms --thresh 0.2 " + data("rnms_cross.txt")).out).size(), 2u);
  EXPECT_EQ(lines(run("rnms --thresh 0.2 --class-thresh vehicle=0.1 " + data("rnms_cross.txt")).out).size(), 1u);
}

TEST(CliMask, NoBoxesAndFixture) {
  Result r = run("mask --rows 2 --cols 3");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "P2\n3 2\n255\n0 0 0\n0 0 0\n");
  const fs::path out = scratch("mask.pgm");
  r = run("mask " + data("mask_boxes.txt") + " --rows 4 --cols 4 -o " + out.string());
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(slurp(out), "P2\n4 4\n255\n255 255 0 0\n255 255 0 0\n0 0 0 0\n0 0 0 0\n");
}

TEST(CliLosscheck, PassesOnDefaults) {
  const Result r = run("losscheck");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("max rel err"), std::string::npos);
  EXPECT_NE(r.out.find("<= 1e-04"), std::string::npos) << r.out;
}

TEST(CliCoding, EncodeThenDecode) {
  Result r = run("encode -", false, "12 8 20 10 -30 10 10 10 10 -30\\n");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "0.200000 -0.200000 0.693147 0.000000 0.000000\n");
  r = run("decode -", false, "0.2 -0.2 0.6931471805599453 0 0 10 10 10 10 -30\\n");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "12.000000 8.000000 20.000000 10.000000 -30.000000\n");
  EXPECT_EQ(run("decode -", false, "0 0 60 0 0 10 10 10 10 -30\\n").code, 2);
}

}  // namespace
