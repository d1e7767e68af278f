#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "resflow/resflow.hpp"
#include "test_support.hpp"

using namespace resflow;
using resflow::testkit::TempDir;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(RESFLOW_CLI_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t count_files(const fs::path& dir, const std::string& prefix) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().filename().string().rfind(prefix, 0) == 0) ++n;
  return n;
}

// Small, clearly separable corpus: strong jitter on the fakes.
const char* kSynthArgs = "--real 16 --fake 16 --size 32 --frames 5 --jitter 2 --velocity-std 2 --seed 3";
const char* kModelArgs = "--input-size 16 --stages 8:1:2 --head-hidden 8 --batch 4 --lr 1e-3 --lr-floor 1e-5 "
                         "--patience 5 --epochs 30 --iterations 60 --workers 1";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override { unsetenv("RESFLOW_CACHE"); }
};

}  // namespace

TEST_F(Cli, SynthWritesManifest) {
  TempDir d;
  const auto r = run("synth --out " + (d / "c").string() + " --real 4 --fake 4 --seed 7 --size 16 --frames 3");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("resolved config"), std::string::npos);
  EXPECT_NE(r.output.find("manifest.tsv"), std::string::npos);
  const auto m = load_manifest(d / "c" / "manifest.tsv");
  EXPECT_EQ(m.entries.size(), 8u);
  EXPECT_TRUE(fs::exists(d / "c" / "run_config.json"));
}

TEST_F(Cli, SynthWithoutOutIsUsageError) {
  const auto r = run("synth --real 4");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("--out"), std::string::npos) << r.output;
}

TEST_F(Cli, UnknownFlagOrCommandIsUsageError) {
  EXPECT_EQ(run("synth --out x --bogus 1").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("").code, 2);
}

TEST_F(Cli, SynthRerunIsByteIdentical) {
  TempDir d;
  const std::string args = " --real 2 --fake 2 --seed 7 --size 16 --frames 3";
  ASSERT_EQ(run("synth --out " + (d / "a").string() + args).code, 0);
  ASSERT_EQ(run("synth --out " + (d / "b").string() + args).code, 0);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(d / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), d / "a");
    if (rel == "manifest.tsv" || rel == "run_config.json") continue;  // these embed the output path
    EXPECT_EQ(slurp(e.path()), slurp(d / "b" / rel)) << rel;
    ++files;
  }
  EXPECT_EQ(files, 4u * 3u);
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
  TempDir d;
  std::ofstream(d / "cfg.json") << R"({"synth": {"real": 1, "fake": 3, "size": 16, "frames": 2}})";
  const auto r = run("--config " + (d / "cfg.json").string() + " synth --out " + (d / "c").string() + " --fake 2");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto m = load_manifest(d / "c" / "manifest.tsv");
  EXPECT_EQ(m.count(Label::Real), 1u);  // from the file
  EXPECT_EQ(m.count(Label::Fake), 2u);  // flag wins
  std::ofstream(d / "bad.json") << R"({"synth": {"reel": 1}})";
  EXPECT_EQ(run("--config " + (d / "bad.json").string() + " synth --out " + (d / "x").string()).code, 2);
}

TEST_F(Cli, PreprocessCachesAndIsIdempotent) {
  TempDir d;
  ASSERT_EQ(run("synth --out " + (d / "c").string() + " --real 1 --fake 1 --size 16 --frames 8").code, 0);
  const std::string args =
      "preprocess --manifest " + (d / "c" / "manifest.tsv").string() + " --cache " + (d / "cache").string();
  const auto first = run(args);
  ASSERT_EQ(first.code, 0) << first.output;
  EXPECT_NE(first.output.find("computed 2, reused 0"), std::string::npos) << first.output;
  EXPECT_EQ(count_files(d / "cache" / "real_0000", "flow_"), 7u);
  EXPECT_EQ(count_files(d / "cache" / "real_0000", "resid_"), 6u);
  EXPECT_TRUE(fs::exists(d / "cache" / "real_0000" / "config.hash"));

  const auto before = slurp(d / "cache" / "fake_0000" / "resid_0003.flo");
  const auto second = run(args);
  ASSERT_EQ(second.code, 0) << second.output;
  EXPECT_NE(second.output.find("computed 0, reused 2"), std::string::npos) << second.output;
  EXPECT_EQ(slurp(d / "cache" / "fake_0000" / "resid_0003.flo"), before);

  // A different solver setting invalidates the entries.
  const auto third = run(args + " --smoothness 50");
  EXPECT_NE(third.output.find("computed 2"), std::string::npos) << third.output;
}

TEST_F(Cli, CacheRootFromEnvironment) {
  TempDir d;
  ASSERT_EQ(run("synth --out " + (d / "c").string() + " --real 1 --fake 0 --size 16 --frames 3").code, 0);
  setenv("RESFLOW_CACHE", (d / "envcache").c_str(), 1);
  const auto e = run("preprocess --manifest " + (d / "c" / "manifest.tsv").string() + " --iterations 10");
  unsetenv("RESFLOW_CACHE");
  ASSERT_EQ(e.code, 0) << e.output;
  EXPECT_TRUE(fs::exists(d / "envcache" / "real_0000" / "flow_0001.flo"));
}

TEST_F(Cli, ImportedFlowsGiveIdenticalResiduals) {
  TempDir d;
  ASSERT_EQ(run("synth --out " + (d / "c").string() + " --real 1 --fake 1 --size 16 --frames 5").code, 0);
  const auto manifest = (d / "c" / "manifest.tsv").string();
  ASSERT_EQ(run("preprocess --manifest " + manifest + " --cache " + (d / "solved").string()).code, 0);
  // The solver's cache directory has the import layout: <dir>/<id>/flow_NNNN.flo.
  const auto r = run("preprocess --manifest " + manifest + " --cache " + (d / "imported").string() +
                     " --flow-dir " + (d / "solved").string());
  ASSERT_EQ(r.code, 0) << r.output;
  for (const char* id : {"real_0000", "fake_0000"})
    for (int t = 0; t < 3; ++t) {
      const auto name = residual_file_name(t);
      EXPECT_EQ(slurp(d / "imported" / id / name), slurp(d / "solved" / id / name)) << id << " " << name;
    }
  EXPECT_NE(slurp(d / "imported" / "real_0000" / "config.hash"), slurp(d / "solved" / "real_0000" / "config.hash"));
}

TEST_F(Cli, PreprocessReportsFailuresAndKeepsProgress) {
  TempDir d;
  ASSERT_EQ(run("synth --out " + (d / "c").string() + " --real 1 --fake 1 --size 16 --frames 3").code, 0);
  const auto r = run("preprocess --manifest " + (d / "c" / "manifest.tsv").string() + " --cache " +
                     (d / "cache").string() + " --flow-dir " + (d / "missing").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("failed 2"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("real_0000"), std::string::npos) << r.output;
}

TEST_F(Cli, TrainRejectsUnknownBranch) {
  TempDir d;
  ASSERT_EQ(run("synth --out " + (d / "c").string() + " --real 1 --fake 1 --size 16 --frames 3").code, 0);
  const auto r = run("train --branch bogus --manifest " + (d / "c" / "manifest.tsv").string() + " --out " +
                     (d / "m").string());
  EXPECT_EQ(r.code, 2) << r.output;
}

TEST_F(Cli, TrainEvalReportEndToEnd) {
  TempDir d;
  ASSERT_EQ(run("synth --out " + (d / "c").string() + " " + kSynthArgs).code, 0);
  const auto manifest = (d / "c" / "manifest.tsv").string();
  const auto cache = (d / "cache").string();
  ASSERT_EQ(run("preprocess --manifest " + manifest + " --cache " + cache + " --iterations 60").code, 0);

  const std::string common = " --manifest " + manifest + " --cache " + cache + " " + kModelArgs;
  const auto tr = run("train --branch res --out " + (d / "m").string() + common);
  ASSERT_EQ(tr.code, 0) << tr.output;
  ASSERT_TRUE(fs::exists(d / "m" / "res.ckpt"));
  const auto log = TrainLog::parse(slurp(d / "m" / "res_trainlog.tsv"));
  ASSERT_FALSE(log.epochs.empty());
  EXPECT_GE(log.epochs.back().val_acc, 0.9) << slurp(d / "m" / "res_trainlog.tsv");
  EXPECT_TRUE(fs::exists(d / "m" / "res_run_config.json"));

  // Same seed, same log.
  const auto again = run("train --branch res --out " + (d / "m2").string() + common);
  ASSERT_EQ(again.code, 0) << again.output;
  EXPECT_EQ(slurp(d / "m" / "res_trainlog.tsv"), slurp(d / "m2" / "res_trainlog.tsv"));

  // No silent overwrite.
  EXPECT_EQ(run("train --branch res --out " + (d / "m").string() + common).code, 1);

  auto ori_cfg = std::string(kModelArgs);
  ori_cfg.replace(ori_cfg.find("--epochs 30"), 11, "--epochs 3");
  const auto to = run("train --branch ori --out " + (d / "m").string() + " --manifest " + manifest + " " + ori_cfg);
  ASSERT_EQ(to.code, 0) << to.output;

  const std::string ev = "eval --manifest " + manifest + " --cache " + cache + " --iterations 60 --ori " +
                         (d / "m" / "ori.ckpt").string() + " --res " + (d / "m" / "res.ckpt").string();
  const auto e1 = run(ev + " --alpha 0.5 --beta 0.5 --tag toy --out " + (d / "e").string());
  ASSERT_EQ(e1.code, 0) << e1.output;
  EXPECT_NE(e1.output.find("AUC"), std::string::npos);
  ASSERT_TRUE(fs::exists(d / "e" / "toy_report.json"));
  ASSERT_TRUE(fs::exists(d / "e" / "toy_fused_scores.tsv"));

  EXPECT_EQ(run(ev + " --alpha 0.6 --beta 0.5 --out " + (d / "bad").string()).code, 2);

  // alpha = 1 fusion agrees with scoring the appearance branch on its own.
  ASSERT_EQ(run(ev + " --alpha 1 --beta 0 --tag fused --out " + (d / "e").string()).code, 0);
  const auto single = run("eval --manifest " + manifest + " --model " + (d / "m" / "ori.ckpt").string() +
                          " --tag single --out " + (d / "e").string());
  ASSERT_EQ(single.code, 0) << single.output;
  const auto a = report_from_json(ordered_json::parse(slurp(d / "e" / "fused_report.json")));
  const auto b = report_from_json(ordered_json::parse(slurp(d / "e" / "single_report.json")));
  EXPECT_EQ(a.acc, b.acc);
  EXPECT_EQ(a.auc, b.auc);
  EXPECT_EQ(a.f1, b.f1);

  // Branch modality mismatch is a runtime failure.
  const auto swapped = run("eval --manifest " + manifest + " --ori " + (d / "m" / "res.ckpt").string() +
                           " --res " + (d / "m" / "ori.ckpt").string() + " --out " + (d / "x").string());
  EXPECT_EQ(swapped.code, 1) << swapped.output;

  const auto rep = run("report --detection " + (d / "e" / "toy_report.json").string() + " --out " +
                       (d / "table.md").string());
  ASSERT_EQ(rep.code, 0) << rep.output;
  EXPECT_NE(rep.output.find("| toy |"), std::string::npos) << rep.output;
  EXPECT_NE(slurp(d / "table.md").find("| Dataset | ACC | AUC | F1 |"), std::string::npos);
}
