#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <iostream>
#include <thread>

#include "layoutinstruct/pipeline.hpp"

namespace li = layoutinstruct;

int main(int argc, char** argv) {
  CLI::App app{"Builds layout-aware instruction corpora and evaluation sets."};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::uint64_t total = 0;
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  bool mock = false, strict = false, verbose = false;
  std::string out;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Config file")->required();
    cmd->add_option("--seed", seed, "Global seed");
    cmd->add_option("--workers", workers, "Worker threads (output does not depend on it)")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--mock-llm", mock, "Use the canned mock instead of the generation service");
    cmd->add_flag("--strict", strict, "Fail on any generation miss or failure");
    cmd->add_option("--out", out, "Output directory (overrides the config)");
    cmd->add_flag("-v,--verbose", verbose, "Debug logging");
  };
  auto* pretrain = app.add_subcommand("build-pretrain", "Build the pre-training corpus");
  auto* sft = app.add_subcommand("build-sft", "Build the LayoutCoT SFT corpus");
  auto* eval = app.add_subcommand("build-eval", "Build QA-for-VIE evaluation sets");
  auto* score = app.add_subcommand("score", "Score predictions on evaluation sets");
  for (auto* cmd : {pretrain, sft, eval, score}) add_common(cmd);
  auto* pretrain_total = pretrain->add_option("--total", total, "Number of records to emit");
  auto* sft_total = sft->add_option("--total", total, "Number of records to emit");

  CLI11_PARSE(app, argc, argv);

  spdlog::set_default_logger(spdlog::stderr_color_mt("layoutinstruct"));
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    auto config = li::PipelineConfig::load(config_path);
    li::RunOptions options;
    options.seed = seed;
    options.workers = workers;
    options.mock_llm = mock;
    options.strict = strict;
    if (!out.empty()) options.out_dir = out;
    if (pretrain_total->count() > 0 || sft_total->count() > 0) options.total = total;

    li::CommandResult result;
    if (pretrain->parsed()) result = li::cmd_build_pretrain(config, options);
    else if (sft->parsed()) result = li::cmd_build_sft(config, options);
    else if (eval->parsed()) result = li::cmd_build_eval(config, options);
    else result = li::cmd_score(config, options);
    std::cout << result.summary.dump(2) << "\n";
    return 0;
  } catch (const li::MissingInput& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
