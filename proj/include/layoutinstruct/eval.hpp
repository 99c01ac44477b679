#pragma once

// Zero-shot evaluation: QA-for-VIE sets, baseline prompt formatting and
// ANLS / Rouge-L scoring of adapter predictions.

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "layoutinstruct/json_io.hpp"
#include "layoutinstruct/llm_client.hpp"
#include "layoutinstruct/types.hpp"

namespace layoutinstruct {

enum class Metric { anls, rouge_l };
std::string_view to_string(Metric m);
Metric metric_from_string(std::string_view s);

/// Metric fixed for a known dataset tag (funsd, cord, sroie, docvqa ->
/// anls; visualmrc -> rouge_l); nullopt for tags without a convention.
std::optional<Metric> metric_for_dataset(std::string_view dataset);

struct EvalItem {
  std::string item_id;
  std::string dataset;
  DocumentRecord doc;
  std::string question;
  std::vector<std::string> golds;
  Metric metric = Metric::anls;
  /// Reserved for runs where the relevant area is supplied by hand.
  std::optional<BBox> region_hint;
};

void to_json(Json& j, const EvalItem& item);
void from_json(const Json& j, EvalItem& item);

void write_eval_set(const std::vector<EvalItem>& items, const std::filesystem::path& path);
std::vector<EvalItem> read_eval_set(const std::filesystem::path& path);

struct EvalBuild {
  std::vector<EvalItem> items;
  std::size_t dropped_multi = 0;   // multi-link keys or repeated entity types
  std::size_t dropped_other = 0;   // unlinked keys, missing or empty values
};

/// One item per key entity with exactly one linked value.
EvalBuild build_qa_for_vie_linking(const std::vector<DocumentRecord>& docs);
/// One item per entity type that occurs exactly once in its document.
EvalBuild build_qa_for_vie_entities(const std::vector<DocumentRecord>& docs);

std::string linking_question(std::string_view key_text);
std::string entity_question(std::string_view entity_type);

/// Edit distance over code points of the casefolded, trimmed strings divided
/// by the longer length. Both empty gives 0.
double normalized_levenshtein(std::string_view a, std::string_view b);
/// Max over golds of 1 - NL, zeroed when NL >= tau. Throws on empty golds.
double anls(std::string_view prediction, const std::vector<std::string>& golds, double tau = 0.5);
/// LCS F1 over casefolded whitespace tokens with edge punctuation stripped.
double rouge_l(std::string_view prediction, std::string_view gold);

double score_item(Metric metric, std::string_view prediction, const std::vector<std::string>& golds);

enum class PromptMode { plain, layout_text };
PromptMode prompt_mode_from_string(std::string_view s);

/// Document body in reading order (plain text or layout text), a newline,
/// then the question.
std::string format_prompt(const EvalItem& item, PromptMode mode);

/// item -> prediction. Returning nullopt or throwing flags the item.
using Adapter = std::function<std::optional<std::string>(const EvalItem&)>;

Adapter gold_echo_adapter();
/// Predictions keyed by item_id; missing ids return nullopt.
Adapter prediction_map_adapter(std::map<std::string, std::string> predictions);
/// Reads JSONL {"item_id","prediction"}.
std::map<std::string, std::string> read_predictions(const std::filesystem::path& path);
/// Sends format_prompt(item, mode) through the generator.
Adapter endpoint_adapter(TextGenerator& client, PromptMode mode);

struct ItemScore {
  std::string item_id;
  std::string prediction;
  double score = 0;
  bool flagged = false;
  std::string note;
};

struct ScoreReport {
  std::string dataset;
  Metric metric = Metric::anls;
  std::size_t n_items = 0;
  double mean_score = 0;
  std::size_t n_flagged = 0;
  std::string beam_note;
  std::vector<ItemScore> per_item;  // sorted by item_id

  Json summary_json() const;
  std::string table() const;
};

/// Scores every item, `workers` at a time. All items must share one dataset
/// and one metric, and the metric must match the dataset's convention.
ScoreReport score_run(const std::vector<EvalItem>& items, const Adapter& adapter,
                      std::string beam_note = {}, std::size_t workers = 1);

/// `<stem>.jsonl` (summary line, then one line per item) and `<stem>.txt`.
void write_score_report(const ScoreReport& report, const std::filesystem::path& stem);

}  // namespace layoutinstruct
