#pragma once

// Orchestration behind the command-line tool: ingestion, task builders,
// mixing and emission for the pre-training and SFT corpora, evaluation set
// construction and scoring.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "layoutinstruct/cot_builder.hpp"
#include "layoutinstruct/json_io.hpp"
#include "layoutinstruct/pretrain_doc.hpp"
#include "layoutinstruct/types.hpp"

namespace layoutinstruct {

/// A configured input path that does not exist.
class MissingInput : public Error {
 public:
  MissingInput(const std::string& key, const std::filesystem::path& path)
      : Error("cli", key, "input not found: " + path.string()) {}
};

struct Variants {
  std::vector<TlrFormat> tlr_formats = {TlrFormat::angle, TlrFormat::structured, TlrFormat::markdown};
  int mvlm = 2;
  int mask_position = 2;
  int geometric = 4;
  int tu_logical = 3;
  int tu_content = 3;
};

/// Structured-object config file. Relative paths resolve against the
/// directory that holds the file.
struct PipelineConfig {
  std::filesystem::path base_dir;

  // Inputs.
  std::optional<std::filesystem::path> ocr_dir;
  std::optional<std::filesystem::path> layout_file;
  std::optional<std::filesystem::path> table_file;
  std::optional<std::filesystem::path> sft_image_dir;
  std::optional<std::filesystem::path> html_dir;
  std::optional<std::filesystem::path> mrc_file;
  std::optional<std::filesystem::path> linking_dir;
  std::optional<std::filesystem::path> entity_dir;
  std::string linking_dataset = "funsd";
  std::string entity_dataset = "sroie";

  // Generation service.
  std::string endpoint_url;
  std::string model_name;
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> mock_canned;
  std::string renderer_cmd;
  std::optional<std::filesystem::path> resources;

  // Corpus shape.
  std::string pretrain_ratio = "1:4:4";
  std::string sft_ratio = "5:4.5:0.5";
  std::optional<std::uint64_t> total;
  bool with_replacement = false;
  double mask_rate = 0.15;
  int mask_position_k = 1;
  std::size_t max_tokens = 512;
  Variants variants;

  // Scoring.
  std::vector<std::filesystem::path> eval_sets;
  std::string adapter = "gold_echo";  // gold_echo | predictions | endpoint
  std::optional<std::filesystem::path> predictions_dir;
  std::string prompt_mode = "plain";
  std::string beam_note;

  std::filesystem::path out_dir = "out";

  static PipelineConfig from_json(const Json& j, const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& file);
};

struct RunOptions {
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> total;
  std::size_t workers = 1;
  bool mock_llm = false;
  bool strict = false;
  std::optional<std::filesystem::path> out_dir;
};

/// OCR pages for the text-bearing pre-training tasks, truncated to the token budget.
std::vector<DocumentRecord> load_pretrain_text_docs(const PipelineConfig& config,
                                                    Json* report = nullptr);

/// Image, HTML and MRC sources for the SFT build, in that order.
std::vector<CorpusSource> load_sft_sources(const PipelineConfig& config, Json* report = nullptr);

struct CommandResult {
  std::vector<std::filesystem::path> outputs;
  Json summary;
};

/// Writes `pretrain.jsonl` and `pretrain_stats.json`.
CommandResult cmd_build_pretrain(const PipelineConfig& config, const RunOptions& options);
/// Writes `sft.jsonl`, `sft_stats.json`, `render/` and `render_manifest.jsonl`.
CommandResult cmd_build_sft(const PipelineConfig& config, const RunOptions& options);
/// Writes `eval_<dataset>.jsonl` per configured VIE input.
CommandResult cmd_build_eval(const PipelineConfig& config, const RunOptions& options);
/// Writes `score_<set>.jsonl` and `score_<set>.txt` per configured eval set.
CommandResult cmd_score(const PipelineConfig& config, const RunOptions& options);

}  // namespace layoutinstruct
