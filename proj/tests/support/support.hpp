#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "layoutinstruct/pipeline.hpp"
#include "layoutinstruct/templates.hpp"

namespace lit {

std::filesystem::path fixture_dir();
std::filesystem::path cli_path();

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

/// Runs the command-line tool with `args`; returns its exit status. Output
/// goes to `<log>` when given, otherwise it is discarded.
int run_cli(const std::string& args, const std::filesystem::path& log = {});

std::string slurp(const std::filesystem::path& p);

/// Canned responses for every prompt the fixture builds send: a dense
/// description per pre-training page, and per image/HTML source a reply with
/// four grounded QA objects plus one whose relevant sentence is not in the
/// document. Keyed by prompt SHA-256.
std::map<std::string, std::string> synthesize_canned(
    const layoutinstruct::PipelineConfig& pretrain, const layoutinstruct::PipelineConfig& sft,
    const layoutinstruct::TemplateBank& bank);

std::string canned_jsonl(const std::map<std::string, std::string>& canned);

/// Relevant sentence used by the ungrounded QA object of every reply.
inline constexpr const char* kUngroundedSentence = "Zebra quartz nebula xylophone";

}  // namespace lit
