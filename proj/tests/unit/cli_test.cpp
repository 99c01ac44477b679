#include <gtest/gtest.h>

#include <fstream>

#include "layoutinstruct/assembler.hpp"
#include "layoutinstruct/json_io.hpp"
#include "support.hpp"

using namespace layoutinstruct;
namespace fs = std::filesystem;

namespace {

std::string config(const char* name) { return "'" + (lit::fixture_dir() / name).string() + "'"; }

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::map<std::string, std::size_t> levels(const fs::path& jsonl) {
  std::map<std::string, std::size_t> out;
  for (const auto& r : read_jsonl(jsonl)) ++out[std::string(to_string(r.level))];
  return out;
}

}  // namespace

TEST(Cli, MissingInputExitsWithTwo) {
  auto dir = lit::scratch_dir("cli-missing");
  std::ofstream(dir / "c.json") << R"({"ocr_dir":"nowhere","out_dir":"out"})";
  EXPECT_EQ(lit::run_cli("build-pretrain --mock-llm --config " + q(dir / "c.json")), 2);
  EXPECT_EQ(lit::run_cli("build-pretrain --config " + q(dir / "absent.json")), 2);
}

TEST(Cli, BadConfigAndUsageFail) {
  auto dir = lit::scratch_dir("cli-bad");
  std::ofstream(dir / "c.json") << R"({"ocr_dri":"typo"})";
  EXPECT_EQ(lit::run_cli("build-pretrain --config " + q(dir / "c.json")), 1);
  EXPECT_NE(lit::run_cli("no-such-command"), 0);
}

TEST(Cli, PretrainMixesOneFourFour) {
  auto out = lit::scratch_dir("cli-pretrain");
  ASSERT_EQ(lit::run_cli("build-pretrain --mock-llm --total 90 --seed 3 --workers 4 --config " +
                         config("pretrain.json") + " --out " + q(out)),
            0);
  EXPECT_EQ(levels(out / "pretrain.jsonl"),
            (std::map<std::string, std::size_t>{{"document", 10}, {"region", 40}, {"segment", 40}}));
  auto stats = Json::parse(lit::slurp(out / "pretrain_stats.json"));
  EXPECT_EQ(stats["stats"]["total"], 90);
  EXPECT_EQ(stats["build"]["quotas"], Json::parse("[10,40,40]"));
}

TEST(Cli, PretrainRerunIsByteIdentical) {
  auto a = lit::scratch_dir("cli-rerun-a");
  auto b = lit::scratch_dir("cli-rerun-b");
  const std::string args = "build-pretrain --mock-llm --total 90 --seed 11 --config " + config("pretrain.json");
  ASSERT_EQ(lit::run_cli(args + " --workers 1 --out " + q(a)), 0);
  ASSERT_EQ(lit::run_cli(args + " --workers 6 --out " + q(b)), 0);
  EXPECT_EQ(lit::slurp(a / "pretrain.jsonl"), lit::slurp(b / "pretrain.jsonl"));
  EXPECT_EQ(lit::slurp(a / "pretrain_stats.json"), lit::slurp(b / "pretrain_stats.json"));
  auto c = lit::scratch_dir("cli-rerun-c");
  ASSERT_EQ(lit::run_cli("build-pretrain --mock-llm --total 90 --seed 12 --config " + config("pretrain.json") +
                         " --out " + q(c)),
            0);
  EXPECT_NE(lit::slurp(a / "pretrain.jsonl"), lit::slurp(c / "pretrain.jsonl"));
}

TEST(Cli, SftStrictMockBuild) {
  auto out = lit::scratch_dir("cli-sft");
  ASSERT_EQ(lit::run_cli("build-sft --mock-llm --strict --total 100 --config " + config("sft.json") +
                         " --out " + q(out)),
            0);
  auto records = read_jsonl(out / "sft.jsonl");
  ASSERT_EQ(records.size(), 100u);
  std::map<std::string, std::size_t> by_stream;
  for (const auto& r : records) {
    EXPECT_TRUE(r.cot.has_value());
    EXPECT_EQ(r.level, Level::sft);
    by_stream[r.source == "fetaqa" ? "mrc" : r.source]++;
  }
  EXPECT_EQ(by_stream, (std::map<std::string, std::size_t>{{"html", 45}, {"image", 50}, {"mrc", 5}}));
  EXPECT_TRUE(fs::exists(out / "render_manifest.jsonl"));
  EXPECT_TRUE(fs::exists(out / "sft_stats.json"));
}

TEST(Cli, StrictFailsWithoutCannedReplies) {
  auto dir = lit::scratch_dir("cli-strict");
  std::ofstream(dir / "c.json") << R"({"sft_image_dir":")" << (lit::fixture_dir() / "sft" / "images").string()
                                << R"(","out_dir":"out"})";
  EXPECT_EQ(lit::run_cli("build-sft --mock-llm --strict --config " + q(dir / "c.json")), 1);
  EXPECT_FALSE(fs::exists(dir / "out" / "sft.jsonl"));
}

TEST(Cli, EvalAndGoldEchoScore) {
  auto out = lit::scratch_dir("cli-eval");
  ASSERT_EQ(lit::run_cli("build-eval --config " + config("eval.json") + " --out " + q(out)), 0);
  EXPECT_EQ(read_lines(out / "eval_funsd.jsonl").size(), 3u);
  EXPECT_EQ(read_lines(out / "eval_sroie.jsonl").size(), 4u);
  ASSERT_EQ(lit::run_cli("score --config " + config("eval.json") + " --out " + q(out)), 0);
  for (const char* stem : {"score_eval_funsd", "score_eval_sroie"}) {
    auto lines = read_lines(out / (std::string(stem) + ".jsonl"));
    ASSERT_FALSE(lines.empty()) << stem;
    auto summary = Json::parse(lines[0])["summary"];
    EXPECT_EQ(summary["mean_score"], 1.0) << stem;
    EXPECT_EQ(summary["beam_note"], "external decoder: beam search, beam size 5");
  }
}

TEST(Cli, CannedFixtureIsCurrent) {
  // Regenerate with the make_canned tool when prompts or fixtures change.
  auto pretrain = PipelineConfig::load(lit::fixture_dir() / "pretrain.json");
  auto sft = PipelineConfig::load(lit::fixture_dir() / "sft.json");
  auto expected = lit::canned_jsonl(lit::synthesize_canned(pretrain, sft, TemplateBank::builtin()));
  EXPECT_EQ(lit::slurp(lit::fixture_dir() / "canned.jsonl"), expected);
}
