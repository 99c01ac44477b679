#pragma once

// LayoutCoT construction over three kinds of sources:
//   image documents -> layout-text representation from their OCR segments
//   HTML documents  -> the HTML itself, with boxes from a sidecar page file
//   MRC tables      -> question/answer reused, text CoT organized by rule
// Each question/answer pair becomes one SFT record whose step-2 box is the
// union of the segments that back the relevant sentences.

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "layoutinstruct/ingest.hpp"
#include "layoutinstruct/llm_client.hpp"
#include "layoutinstruct/templates.hpp"
#include "layoutinstruct/types.hpp"

namespace layoutinstruct {

enum class SourceKind { html, image, mrc };
std::string_view to_string(SourceKind k);

struct HtmlSource {
  std::string doc_id;
  std::string html;
  /// Text and boxes of the rendered page (generic OCR schema), produced upstream.
  std::optional<DocumentRecord> derivation;
};

struct CorpusSource {
  SourceKind kind = SourceKind::image;
  std::variant<HtmlSource, DocumentRecord, MRCItem> payload;

  std::string id() const;
};

struct DocRepresentation {
  enum class Kind { layout_text, html };
  Kind kind = Kind::layout_text;
  std::string body;
  std::vector<TextSegment> segments;
};

struct QAPair {
  std::string question;
  std::string answer;
};

struct TextCoT {
  std::string step1_analysis;
  std::vector<std::string> relevant_sentences;
  std::string step3_formation;
};

struct QaCot {
  QAPair qa;
  TextCoT cot;
};

/// Fixed grid metrics used to lay out MRC tables before normalization.
inline constexpr int kMrcCellWidth = 200;
inline constexpr int kMrcCellHeight = 60;

std::string render_table_html(const TableAnnotation& table);
/// Normalized box of a cell on the fixed MRC grid.
BBox mrc_cell_box(const TableAnnotation& table, int row, int col);

/// Throws Error for empty sources and HTML without a box derivation.
DocRepresentation represent_document(const CorpusSource& src);

std::string render_qa_cot_prompt(const DocRepresentation& rep, const TemplateBank& bank);

struct QaCotResult {
  std::vector<QaCot> pairs;
  std::size_t dropped_objects = 0;
  bool skipped = false;
  std::string reason;
};

/// Parses a QA & text-CoT reply: a list of objects with question, answer,
/// analysis, relevant_sentences and explanation. Objects missing a field are
/// dropped. Returns nullopt when no list can be parsed at all.
std::optional<QaCotResult> parse_qa_cot_response(const std::string& response);

/// Prompts the service; one reprompt if the reply cannot be parsed, then skip.
QaCotResult generate_qa_cot(const DocRepresentation& rep, TextGenerator& client,
                            const TemplateBank& bank = TemplateBank::builtin());

/// Rule-organized text CoT for an MRC item. Relevant sentences are the
/// highlighted cell texts.
QaCot reuse_mrc_qa(const MRCItem& item);

/// Casefolded, whitespace-collapsed, edge-punctuation-stripped form used for
/// sentence matching.
std::string normalize_for_match(std::string_view s);

/// True when either normalized string contains the other. Empty normalized
/// strings never match.
bool sentence_matches(std::string_view sentence, std::string_view segment_text);

/// Segments backing the relevant sentences, in document order. Empty when any
/// sentence matches nothing (the pair must then be discarded).
std::vector<TextSegment> match_relevant_sentences(const TextCoT& tc,
                                                  const std::vector<TextSegment>& segments);

/// Step 1 and 3 copied from the text CoT; step 2 is the union of matched boxes.
LayoutCoTRecord build_layout_cot(const TextCoT& tc, const std::vector<TextSegment>& matched);

struct SourceBuild {
  std::vector<InstructionRecord> records;
  std::size_t pairs_generated = 0;
  std::size_t pairs_discarded = 0;
  std::size_t objects_dropped = 0;
  bool skipped = false;
  std::string reason;
};

/// Relative image path recorded for rendered (HTML/MRC) sources.
std::string rendered_image_path(std::string_view doc_id);

/// Runs the whole construction for one source. `global_seed` feeds the
/// per-record seeds.
SourceBuild build_cot_records(const CorpusSource& src, TextGenerator& client,
                              std::uint64_t global_seed,
                              const TemplateBank& bank = TemplateBank::builtin());

struct ManifestEntry {
  std::string doc_id;
  std::string html_path;
  std::string image_path;
  std::string status;  // pending | done | failed | write_failed
};

struct ManifestSummary {
  std::vector<ManifestEntry> entries;
  std::size_t pending = 0;
  std::size_t done = 0;
  std::size_t failed = 0;
  std::size_t write_failed = 0;
};

/// Writes every HTML/MRC body to `<out_dir>/render/<doc_id>.html` and a
/// manifest `<out_dir>/render_manifest.jsonl` of {doc_id, html_path,
/// image_path, status}; paths are relative to out_dir. With a renderer
/// command (placeholders {html} and {out}) each page is rendered in place.
ManifestSummary emit_render_manifest(const std::vector<CorpusSource>& sources,
                                     const std::filesystem::path& out_dir,
                                     const std::string& renderer_cmd = {});

/// HTML sources from `dir`: each `<stem>.html` with an optional `<stem>.json`
/// sidecar in the generic OCR page schema.
LoadResult<CorpusSource> load_html_sources(const std::filesystem::path& dir);

}  // namespace layoutinstruct
