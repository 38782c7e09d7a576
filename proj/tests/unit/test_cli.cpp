#include <gtest/gtest.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "strokeless/checkpoint.hpp"
#include "strokeless/cli.hpp"
#include "strokeless/png_io.hpp"
#include "test_support.hpp"

namespace strokeless {
namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "strokeless");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string first_id(const std::filesystem::path& data) {
  for (const auto& e : std::filesystem::directory_iterator(data / "text")) return e.path().stem().string();
  return {};
}

// Writes a small dataset once and shares it between tests.
const std::filesystem::path& synth_dir() {
  static const std::filesystem::path dir = [] {
    const auto d = testing::fresh_dir("cli_data");
    const Result r = run({"dataset-synth", "--out", d.string(), "--count", "5", "--size", "64", "--json"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(nlohmann::json::parse(r.out)["count"], 5);
    return d;
  }();
  return dir;
}

std::vector<std::string> tiny_flags() {
  return {"--size", "32", "--base-channels", "4", "--levels", "3", "--disc-channels", "8,8,8,8,8", "--batch", "2"};
}

TEST(Cli, HelpExitsZero) {
  const Result r = run({"--help"});
  EXPECT_EQ(r.code, cli::kExitOk);
  EXPECT_NE(r.out.find("train"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"train", "--bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"train", "--data", "x", "--ablation", "nonsense"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"dataset-synth", "--out", "x"}).code, cli::kExitUsage);
}

TEST(Cli, InferNeedsMaskOrPolygons) {
  const std::string img = (synth_dir() / "text" / (first_id(synth_dir()) + ".png")).string();
  const Result r = run({"infer", "--ckpt", "nowhere", "--image", img, "--out", "o.png"});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("--mask"), std::string::npos);
}

TEST(Cli, MissingCheckpointIsDomainError) {
  const Result r = run({"eval", "--data", synth_dir().string(), "--ckpt", "/nonexistent/ckpt"});
  EXPECT_EQ(r.code, cli::kExitDomainError);
  EXPECT_NE(r.err.find("checkpoint"), std::string::npos) << r.err;
}

TEST(Cli, SplitReportsCounts) {
  const auto d = testing::fresh_dir("cli_split");
  ASSERT_EQ(run({"dataset-synth", "--out", d.string(), "--count", "8", "--size", "64"}).code, 0);
  const Result r = run({"split", "--manifest", (d / "manifest.json").string(), "--train-frac", "0.75", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["train"], 6);
  EXPECT_EQ(j["test"], 2);
}

TEST(Cli, ZeroEpochTrainWritesCheckpoint) {
  const auto ck = testing::fresh_dir("cli_ckpt0");
  std::vector<std::string> args{"train", "--data", synth_dir().string(), "--epochs", "0", "--out", ck.string()};
  for (auto& f : tiny_flags()) args.push_back(f);
  const Result r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(ck / "manifest.json"));
  EXPECT_EQ(read_checkpoint_info(ck).step, 0);
}

TEST(Cli, TrainEvalInferPipeline) {
  const auto ck = testing::fresh_dir("cli_ckpt");
  const auto cfg = ck.parent_path() / "strokeless_test_cli_cfg.json";
  std::ofstream(cfg) << R"({"base_channels": 6, "levels": 3, "lambda_s": 2.0})";
  std::vector<std::string> args{"train",    synth_dir().string(), "--epochs", "1",       "--out",
                                ck.string(), "--config",          cfg.string(), "--metrics",
                                (ck.parent_path() / "strokeless_test_cli_m.jsonl").string(), "--json"};
  args.insert(args.begin() + 1, "--data");
  for (auto& f : tiny_flags()) args.push_back(f);
  const Result t = run(args);
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_EQ(nlohmann::json::parse(t.out)["step"], 3);

  // The flag wins over the file; keys absent from the flags come from the file.
  const CheckpointInfo info = read_checkpoint_info(ck);
  EXPECT_EQ(info.model.base_channels, 4);
  EXPECT_EQ(info.model.levels, 3);

  std::ifstream metrics(ck.parent_path() / "strokeless_test_cli_m.jsonl");
  int lines = 0;
  for (std::string line; std::getline(metrics, line); ++lines) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("l_tsd") && j.contains("step"));
  }
  EXPECT_EQ(lines, 3);

  const Result e = run({"eval", "--data", synth_dir().string(), "--ckpt", ck.string(), "--json"});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_TRUE(nlohmann::json::parse(e.out).contains("psnr"));
  const Result table = run({"eval", "--data", synth_dir().string(), "--ckpt", ck.string()});
  EXPECT_NE(table.out.find("PSNR"), std::string::npos) << table.out;

  const auto outdir = testing::fresh_dir("cli_infer");
  const auto polys = outdir / "p.json";
  std::ofstream(polys) << "[[[2,2],[20,2],[20,12],[2,12]]]";
  const std::string img = (synth_dir() / "text" / (first_id(synth_dir()) + ".png")).string();
  const Result i = run({"infer", "--ckpt", ck.string(), "--image", img, "--polygons", polys.string(), "--out",
                        (outdir / "b.png").string(), "--composite"});
  ASSERT_EQ(i.code, 0) << i.err;
  EXPECT_TRUE(std::filesystem::exists(outdir / "b.png"));
  EXPECT_TRUE(std::filesystem::exists(outdir / "b.stroke.png"));
  EXPECT_EQ(load_image_png(outdir / "b.png").height(), 64);

  const Result bad = run({"infer", "--ckpt", ck.string(), "--image", img, "--polygons", polys.string(), "--mask",
                          img, "--out", (outdir / "c.png").string()});
  EXPECT_EQ(bad.code, cli::kExitUsage);
}

TEST(Cli, ConfigFileAndFlagOverrides) {
  TrainConfig cfg;
  cli::apply_train_config_json(cfg, R"({"lr": 0.002, "lambda_s": 2.0, "ablation": "wd_tsdnet", "epochs": 3})");
  EXPECT_DOUBLE_EQ(cfg.lr, 0.002);
  EXPECT_DOUBLE_EQ(cfg.loss.lambda_s, 2.0);
  EXPECT_EQ(cfg.ablation, Ablation::kWdTsdnet);
  EXPECT_EQ(cfg.epochs, 3);
  EXPECT_THROW(cli::apply_train_config_json(cfg, R"({"learning_rate": 1})"), InvalidArgument);
  EXPECT_THROW(cli::apply_train_config_json(cfg, "[1, 2]"), InvalidArgument);
}

}  // namespace
}  // namespace strokeless
