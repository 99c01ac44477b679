#include "layoutinstruct/cot_builder.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "layoutinstruct/core.hpp"
#include "layoutinstruct/json_io.hpp"
#include "layoutinstruct/pretrain_doc.hpp"
#include "layoutinstruct/random.hpp"
#include "layoutinstruct/text.hpp"

namespace fs = std::filesystem;

namespace layoutinstruct {

std::string_view to_string(SourceKind k) {
  switch (k) {
    case SourceKind::html: return "html";
    case SourceKind::image: return "image";
    case SourceKind::mrc: return "mrc";
  }
  return "?";
}

std::string CorpusSource::id() const {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, MRCItem>) return p.item_id;
        else return p.doc_id;
      },
      payload);
}

namespace {

std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string extract_json_list(const std::string& response) {
  auto b = response.find('[');
  auto e = response.rfind(']');
  if (b == std::string::npos || e == std::string::npos || e < b) return {};
  return response.substr(b, e - b + 1);
}

}  // namespace

std::string render_table_html(const TableAnnotation& table) {
  std::string out = "<html><body><table border=\"1\">\n";
  for (int r = 1; r <= table.n_rows; ++r) {
    out += "<tr>";
    for (int c = 1; c <= table.n_cols; ++c) {
      const TableCell* cell = table.find(r, c);
      out += "<td>" + (cell ? html_escape(cell->text) : std::string{}) + "</td>";
    }
    out += "</tr>\n";
  }
  out += "</table></body></html>";
  return out;
}

BBox mrc_cell_box(const TableAnnotation& table, int row, int col) {
  const int page_w = table.n_cols * kMrcCellWidth;
  const int page_h = table.n_rows * kMrcCellHeight;
  PixelBox px{static_cast<double>((col - 1) * kMrcCellWidth),
              static_cast<double>((row - 1) * kMrcCellHeight),
              static_cast<double>(col * kMrcCellWidth), static_cast<double>(row * kMrcCellHeight)};
  return normalize_bbox(px, page_w, page_h);
}

DocRepresentation represent_document(const CorpusSource& src) {
  DocRepresentation rep;
  switch (src.kind) {
    case SourceKind::image: {
      const auto& doc = std::get<DocumentRecord>(src.payload);
      if (doc.segments.empty()) throw Error("cot-builder", doc.doc_id, "image source without segments");
      rep.kind = DocRepresentation::Kind::layout_text;
      rep.segments = doc.segments;
      rep.body = render_layout_text(rep.segments);
      break;
    }
    case SourceKind::html: {
      const auto& h = std::get<HtmlSource>(src.payload);
      if (text::trim(h.html).empty()) throw Error("cot-builder", h.doc_id, "empty HTML source");
      if (!h.derivation) throw Error("cot-builder", h.doc_id, "HTML source without box derivation file");
      rep.kind = DocRepresentation::Kind::html;
      rep.body = h.html;
      rep.segments = h.derivation->segments;
      if (rep.segments.empty()) throw Error("cot-builder", h.doc_id, "box derivation has no segments");
      break;
    }
    case SourceKind::mrc: {
      const auto& item = std::get<MRCItem>(src.payload);
      if (item.table.cells.empty()) throw Error("cot-builder", item.item_id, "empty MRC table");
      rep.kind = DocRepresentation::Kind::html;
      rep.body = render_table_html(item.table);
      for (int r = 1; r <= item.table.n_rows; ++r)
        for (int c = 1; c <= item.table.n_cols; ++c)
          if (const TableCell* cell = item.table.find(r, c); cell && !cell->text.empty())
            rep.segments.push_back(TextSegment{cell->text, mrc_cell_box(item.table, r, c)});
      break;
    }
  }
  return rep;
}

std::string render_qa_cot_prompt(const DocRepresentation& rep, const TemplateBank& bank) {
  std::string note = rep.kind == DocRepresentation::Kind::layout_text
                         ? "Each line is one text of the document written as {text:\"...\", "
                           "box:[x1,y1,x2,y2]}, with coordinates normalized to a 0-1000 grid."
                         : "The document is given as HTML source.";
  return render_prompt(bank, "qa_cot", {{"doc_kind_note", note}, {"document", rep.body}});
}

std::optional<QaCotResult> parse_qa_cot_response(const std::string& response) {
  std::string list = extract_json_list(response);
  if (list.empty()) return std::nullopt;
  Json arr = Json::parse(list, nullptr, false);
  if (arr.is_discarded() || !arr.is_array()) return std::nullopt;
  QaCotResult result;
  for (const auto& o : arr) {
    auto str = [&](const char* key) -> std::optional<std::string> {
      if (!o.is_object() || !o.contains(key) || !o[key].is_string()) return std::nullopt;
      return o[key].get<std::string>();
    };
    auto q = str("question"), a = str("answer"), an = str("analysis"), ex = str("explanation");
    bool ok = q && a && an && ex && !text::trim(*q).empty() && !text::trim(*a).empty() &&
              o.contains("relevant_sentences") && o["relevant_sentences"].is_array() &&
              !o["relevant_sentences"].empty();
    std::vector<std::string> sentences;
    if (ok) {
      for (const auto& s : o["relevant_sentences"]) {
        if (!s.is_string() || text::trim(s.get<std::string>()).empty()) {
          ok = false;
          break;
        }
        sentences.push_back(s.get<std::string>());
      }
    }
    if (!ok) {
      ++result.dropped_objects;
      continue;
    }
    result.pairs.push_back(QaCot{QAPair{*q, *a}, TextCoT{*an, std::move(sentences), *ex}});
  }
  return result;
}

QaCotResult generate_qa_cot(const DocRepresentation& rep, TextGenerator& client,
                            const TemplateBank& bank) {
  const std::string prompt = render_qa_cot_prompt(rep, bank);
  try {
    auto parsed = parse_qa_cot_response(
        client.complete(GenerationRequest{prompt, 0, 0.0, GenerationTag::qa_cot}));
    if (parsed) return *parsed;
    const std::string retry = render_prompt(bank, "qa_cot_retry", {{"previous_prompt", prompt}});
    parsed = parse_qa_cot_response(
        client.complete(GenerationRequest{retry, 0, 0.0, GenerationTag::qa_cot}));
    if (parsed) return *parsed;
    QaCotResult r;
    r.skipped = true;
    r.reason = "unparseable reply after one reprompt";
    return r;
  } catch (const GenerationError& e) {
    QaCotResult r;
    r.skipped = true;
    r.reason = e.what();
    return r;
  }
}

QaCot reuse_mrc_qa(const MRCItem& item) {
  QaCot out;
  out.qa = QAPair{item.question, item.answer};
  std::vector<std::string> quoted;
  for (auto [r, c] : item.highlighted_cells) {
    const TableCell* cell = item.table.find(r, c);
    std::string t = cell ? cell->text : std::string{};
    out.cot.relevant_sentences.push_back(t);
    quoted.push_back("\"" + t + "\" (row " + std::to_string(r) + ", column " + std::to_string(c) + ")");
  }
  out.cot.step1_analysis = "This is a Table question. It asks: \"" + item.question +
                           "\" The answer has to be read from specific cells of the table.";
  out.cot.step3_formation = "The relevant cells of the table are " + text::join(quoted, ", ") +
                            ". Combining their contents, the answer is: " + item.answer;
  return out;
}

std::string normalize_for_match(std::string_view s) {
  return text::trim(text::strip_edge_punctuation(text::collapse_whitespace(text::casefold(s))));
}

bool sentence_matches(std::string_view sentence, std::string_view segment_text) {
  const std::string a = normalize_for_match(sentence);
  const std::string b = normalize_for_match(segment_text);
  if (a.empty() || b.empty()) return false;
  return a.find(b) != std::string::npos || b.find(a) != std::string::npos;
}

std::vector<TextSegment> match_relevant_sentences(const TextCoT& tc,
                                                  const std::vector<TextSegment>& segments) {
  std::vector<bool> used(segments.size(), false);
  for (const auto& sentence : tc.relevant_sentences) {
    bool any = false;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      if (sentence_matches(sentence, segments[i].text)) {
        used[i] = true;
        any = true;
      }
    }
    if (!any) return {};
  }
  std::vector<TextSegment> matched;
  for (std::size_t i = 0; i < segments.size(); ++i)
    if (used[i]) matched.push_back(segments[i]);
  return matched;
}

LayoutCoTRecord build_layout_cot(const TextCoT& tc, const std::vector<TextSegment>& matched) {
  if (matched.empty()) throw Error("cot-builder", "", "no matched segment for the relevant area");
  std::vector<BBox> boxes;
  for (const auto& s : matched) boxes.push_back(s.box);
  return LayoutCoTRecord{tc.step1_analysis, union_bbox(boxes), tc.step3_formation};
}

std::string rendered_image_path(std::string_view doc_id) {
  return "render/" + std::string(doc_id) + ".png";
}

SourceBuild build_cot_records(const CorpusSource& src, TextGenerator& client,
                              std::uint64_t global_seed, const TemplateBank& bank) {
  SourceBuild out;
  const std::string id = src.id();
  DocRepresentation rep;
  try {
    rep = represent_document(src);
  } catch (const Error& e) {
    out.skipped = true;
    out.reason = e.what();
    return out;
  }

  std::vector<QaCot> pairs;
  if (src.kind == SourceKind::mrc) {
    pairs.push_back(reuse_mrc_qa(std::get<MRCItem>(src.payload)));
  } else {
    auto gen = generate_qa_cot(rep, client, bank);
    if (gen.skipped) {
      out.skipped = true;
      out.reason = gen.reason;
      return out;
    }
    out.objects_dropped = gen.dropped_objects;
    pairs = std::move(gen.pairs);
  }
  out.pairs_generated = pairs.size();

  std::optional<std::string> image_ref;
  std::string source_tag;
  switch (src.kind) {
    case SourceKind::image: {
      const auto& doc = std::get<DocumentRecord>(src.payload);
      image_ref = doc.image_ref;
      source_tag = doc.source.empty() ? "image" : doc.source;
      break;
    }
    case SourceKind::html:
      image_ref = rendered_image_path(id);
      source_tag = "html";
      break;
    case SourceKind::mrc:
      image_ref = rendered_image_path(id);
      source_tag = std::get<MRCItem>(src.payload).source;
      if (source_tag.empty()) source_tag = "mrc";
      break;
  }

  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& [qa, tc] = pairs[k];
    std::vector<TextSegment> matched;
    if (src.kind == SourceKind::mrc) {
      // Highlighted cells are known by position; text matching could pick
      // up other cells that merely contain the same words.
      const auto& item = std::get<MRCItem>(src.payload);
      for (auto [r, c] : item.highlighted_cells)
        matched.push_back(TextSegment{item.table.find(r, c)->text, mrc_cell_box(item.table, r, c)});
    } else {
      matched = match_relevant_sentences(tc, rep.segments);
    }
    if (matched.empty()) {
      ++out.pairs_discarded;
      continue;
    }
    InstructionRecord rec;
    rec.task = Task::cot_qa;
    rec.level = Level::sft;
    rec.doc_id = id;
    rec.image_ref = image_ref;
    rec.input_segments = rep.segments;
    rec.question = qa.question;
    rec.answer = qa.answer;
    rec.cot = build_layout_cot(tc, matched);
    rec.seed = derive_seed(global_seed, id, to_string(Task::cot_qa), k);
    rec.source = source_tag;
    rec.id = make_record_id(id, Task::cot_qa, rec.seed);
    out.records.push_back(std::move(rec));
  }
  return out;
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

}  // namespace

ManifestSummary emit_render_manifest(const std::vector<CorpusSource>& sources,
                                     const fs::path& out_dir, const std::string& renderer_cmd) {
  ManifestSummary summary;
  std::error_code ec;
  fs::create_directories(out_dir / "render", ec);
  std::string manifest;
  for (const auto& src : sources) {
    if (src.kind == SourceKind::image) continue;
    ManifestEntry entry;
    entry.doc_id = src.id();
    entry.html_path = "render/" + entry.doc_id + ".html";
    entry.image_path = rendered_image_path(entry.doc_id);
    std::string body = src.kind == SourceKind::html
                           ? std::get<HtmlSource>(src.payload).html
                           : render_table_html(std::get<MRCItem>(src.payload).table);
    const fs::path html_abs = out_dir / entry.html_path;
    bool written = false;
    {
      std::ofstream f(html_abs, std::ios::binary | std::ios::trunc);
      if (f) f << body;
      written = static_cast<bool>(f);
    }
    if (!written) {
      entry.status = "write_failed";
      ++summary.write_failed;
      spdlog::warn("render manifest: cannot write {}", html_abs.string());
    } else if (renderer_cmd.empty()) {
      entry.status = "pending";
      ++summary.pending;
    } else {
      std::string cmd = substitute(renderer_cmd, {{"html", shell_quote(html_abs.string())},
                                                  {"out", shell_quote((out_dir / entry.image_path).string())}});
      int rc = std::system(cmd.c_str());
      if (rc == 0) {
        entry.status = "done";
        ++summary.done;
      } else {
        entry.status = "failed";
        ++summary.failed;
        spdlog::warn("renderer exited with status {} for {}", rc, entry.doc_id);
      }
    }
    Json j = Json::object();
    j["doc_id"] = entry.doc_id;
    j["html_path"] = entry.html_path;
    j["image_path"] = entry.image_path;
    j["status"] = entry.status;
    manifest += dump_line(j) + "\n";
    summary.entries.push_back(std::move(entry));
  }
  write_file_atomic(out_dir / "render_manifest.jsonl", manifest);
  return summary;
}

LoadResult<CorpusSource> load_html_sources(const fs::path& dir) {
  LoadResult<CorpusSource> result;
  for (const auto& file : sorted_files(dir, ".html")) {
    ++result.report.records_in;
    try {
      HtmlSource h;
      h.doc_id = file.stem().string();
      h.html = read_file(file);
      fs::path sidecar = file;
      sidecar.replace_extension(".json");
      if (fs::exists(sidecar)) {
        h.derivation = load_ocr_page(sidecar, "html");
        if (auto bad = validate_document(*h.derivation); !bad.empty())
          throw Error("ingest", h.doc_id, bad);
      } else {
        result.report.warn(h.doc_id + ": no box derivation sidecar");
      }
      result.items.push_back(CorpusSource{SourceKind::html, std::move(h)});
      ++result.report.records_out;
    } catch (const std::exception& e) {
      result.report.skip(e.what());
    }
  }
  return result;
}

}  // namespace layoutinstruct
