#include "layoutinstruct/pretrain_doc.hpp"

#include <cstdio>

#include "layoutinstruct/core.hpp"
#include "layoutinstruct/json_io.hpp"
#include "layoutinstruct/random.hpp"
#include "layoutinstruct/text.hpp"

namespace layoutinstruct {

std::string_view to_string(TlrFormat f) {
  switch (f) {
    case TlrFormat::angle: return "angle";
    case TlrFormat::structured: return "structured";
    case TlrFormat::markdown: return "markdown";
  }
  return "?";
}

TlrFormat tlr_format_from_string(std::string_view s) {
  if (s == "angle") return TlrFormat::angle;
  if (s == "structured") return TlrFormat::structured;
  if (s == "markdown") return TlrFormat::markdown;
  throw Error("pretrain-doc", "", "unknown TLR format '" + std::string(s) + "'");
}

std::string make_record_id(std::string_view doc_id, Task task, std::uint64_t seed) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(seed));
  return std::string(doc_id) + "/" + std::string(to_string(task)) + "/" + hex;
}

std::string render_ddd_prompt(const DocumentRecord& doc, const TemplateBank& bank) {
  return render_prompt(bank, "ddd", {{"layout_text", render_layout_text(doc.segments)}});
}

InstructionRecord build_ddd(const DocumentRecord& doc, TextGenerator& client,
                            std::uint64_t seed, const TemplateBank& bank) {
  if (doc.segments.empty()) throw SkipRecord("pretrain-doc", doc.doc_id, "no segments to describe");
  Rng rng(seed);
  InstructionRecord rec;
  rec.task = Task::ddd;
  rec.level = level_of(rec.task);
  rec.doc_id = doc.doc_id;
  rec.image_ref = doc.image_ref;
  rec.input_segments = doc.segments;
  rec.question = rng.pick(bank.questions("ddd"));
  GenerationRequest req{render_ddd_prompt(doc, bank), kDddWordCap, 0.0, GenerationTag::ddd};
  try {
    rec.answer = text::trim(client.complete(req));
  } catch (const GenerationError& e) {
    throw SkipRecord("pretrain-doc", doc.doc_id, std::string("description failed: ") + e.what());
  }
  if (rec.answer.empty()) throw SkipRecord("pretrain-doc", doc.doc_id, "empty description");
  rec.seed = seed;
  rec.source = doc.source;
  rec.id = make_record_id(doc.doc_id, rec.task, seed);
  return rec;
}

namespace {

std::string escape_markdown_cell(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '\\') out += "\\\\";
    else if (c == '|') out += "\\|";
    else if (c == '\n') out += "\\n";
    else out += c;
  }
  return out;
}

std::string unescape_markdown_cell(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '|') throw Error("pretrain-doc", "", "unescaped '|' in markdown cell");
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (++i == s.size()) throw Error("pretrain-doc", "", "dangling escape in markdown cell");
    if (s[i] == 'n') out += '\n';
    else if (s[i] == '\\' || s[i] == '|') out += s[i];
    else throw Error("pretrain-doc", "", "unknown markdown escape");
  }
  return out;
}

constexpr std::string_view kMarkdownHeader = "| box | text |\n| --- | --- |";

}  // namespace

std::string render_tlr_answer(const std::vector<TextSegment>& segments, TlrFormat format) {
  switch (format) {
    case TlrFormat::angle: {
      std::vector<std::string> lines;
      for (const auto& s : segments) lines.push_back(serialize_segment(s));
      return text::join(lines, "\n");
    }
    case TlrFormat::structured: {
      Json arr = Json::array();
      for (const auto& s : segments) {
        Json o = Json::object();
        o["box"] = s.box;
        o["text"] = s.text;
        arr.push_back(std::move(o));
      }
      return dump_line(arr);
    }
    case TlrFormat::markdown: {
      std::string out(kMarkdownHeader);
      for (const auto& s : segments)
        out += "\n| " + box_to_string(s.box) + " | " + escape_markdown_cell(s.text) + " |";
      return out;
    }
  }
  return {};
}

std::vector<TextSegment> parse_tlr_answer(const std::string& answer, TlrFormat format) {
  std::vector<TextSegment> out;
  switch (format) {
    case TlrFormat::angle: {
      std::size_t start = 0;
      while (start <= answer.size() && !answer.empty()) {
        auto end = answer.find('\n', start);
        if (end == std::string::npos) end = answer.size();
        out.push_back(parse_segment(std::string_view(answer).substr(start, end - start)));
        start = end + 1;
      }
      return out;
    }
    case TlrFormat::structured: {
      Json arr = Json::parse(answer);
      for (const auto& o : arr) {
        if (o.size() != 2) throw Error("pretrain-doc", "", "structured entry must have box and text only");
        out.push_back(TextSegment{o.at("text").get<std::string>(), o.at("box").get<BBox>()});
      }
      return out;
    }
    case TlrFormat::markdown: {
      if (answer.rfind(kMarkdownHeader, 0) != 0)
        throw Error("pretrain-doc", "", "markdown answer lacks the table header");
      std::string_view rest = std::string_view(answer).substr(kMarkdownHeader.size());
      while (!rest.empty()) {
        if (rest.front() != '\n') throw Error("pretrain-doc", "", "malformed markdown row");
        rest.remove_prefix(1);
        auto end = rest.find('\n');
        std::string_view row = rest.substr(0, end);
        rest = end == std::string_view::npos ? std::string_view{} : rest.substr(end);
        if (row.size() < 4 || row.substr(0, 2) != "| " || row.substr(row.size() - 2) != " |")
          throw Error("pretrain-doc", "", "malformed markdown row");
        auto sep = row.find(" | ", 2);
        if (sep == std::string_view::npos) throw Error("pretrain-doc", "", "malformed markdown row");
        TextSegment seg;
        seg.box = parse_box(row.substr(2, sep - 2));
        seg.text = unescape_markdown_cell(row.substr(sep + 3, row.size() - sep - 5));
        out.push_back(std::move(seg));
      }
      return out;
    }
  }
  return out;
}

InstructionRecord build_tlr(const DocumentRecord& doc, TlrFormat format, std::uint64_t seed,
                            const TemplateBank& bank) {
  if (doc.segments.empty()) throw SkipRecord("pretrain-doc", doc.doc_id, "no segments to reconstruct");
  Rng rng(seed);
  InstructionRecord rec;
  rec.task = Task::tlr;
  rec.level = level_of(rec.task);
  rec.doc_id = doc.doc_id;
  rec.image_ref = doc.image_ref;
  rec.input_segments = doc.segments;
  rec.question = substitute(rng.pick(bank.questions("tlr_" + std::string(to_string(format)))), {});
  rec.answer = render_tlr_answer(doc.segments, format);
  rec.seed = seed;
  rec.source = doc.source;
  rec.id = make_record_id(doc.doc_id, rec.task, seed);
  return rec;
}

}  // namespace layoutinstruct
