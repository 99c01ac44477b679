#include "layoutinstruct/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "layoutinstruct/text.hpp"

namespace layoutinstruct {

namespace {

int scale_coord(double v, int dim) {
  long r = std::lround(v / static_cast<double>(dim) * kCoordScale);
  return static_cast<int>(std::clamp(r, 0L, static_cast<long>(kCoordScale)));
}

std::string fmt_pixel(const PixelBox& b) {
  auto s = [](double v) {
    std::string out = std::to_string(v);
    out.erase(out.find_last_not_of('0') + 1);
    if (!out.empty() && out.back() == '.') out.pop_back();
    return out;
  };
  return "(" + s(b.x1) + "," + s(b.y1) + "," + s(b.x2) + "," + s(b.y2) + ")";
}

}  // namespace

Level level_of(Task task) {
  switch (task) {
    case Task::ddd:
    case Task::tlr:
      return Level::document;
    case Task::dla_locate:
    case Task::dla_classify:
    case Task::tu_shape:
    case Task::tu_logical:
    case Task::tu_content:
      return Level::region;
    case Task::mvlm:
    case Task::mask_pos:
    case Task::geometric:
      return Level::segment;
    case Task::cot_qa:
      return Level::sft;
  }
  return Level::document;
}

std::string_view to_string(Task task) {
  switch (task) {
    case Task::ddd: return "ddd";
    case Task::tlr: return "tlr";
    case Task::dla_locate: return "dla_locate";
    case Task::dla_classify: return "dla_classify";
    case Task::tu_shape: return "tu_shape";
    case Task::tu_logical: return "tu_logical";
    case Task::tu_content: return "tu_content";
    case Task::mvlm: return "mvlm";
    case Task::mask_pos: return "mask_pos";
    case Task::geometric: return "geometric";
    case Task::cot_qa: return "cot_qa";
  }
  return "?";
}

std::string_view to_string(Level level) {
  switch (level) {
    case Level::document: return "document";
    case Level::region: return "region";
    case Level::segment: return "segment";
    case Level::sft: return "sft";
  }
  return "?";
}

Task task_from_string(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(Task::cot_qa); ++i) {
    auto t = static_cast<Task>(i);
    if (to_string(t) == s) return t;
  }
  throw Error("core", "", "unknown task '" + std::string(s) + "'");
}

Level level_from_string(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(Level::sft); ++i) {
    auto l = static_cast<Level>(i);
    if (to_string(l) == s) return l;
  }
  throw Error("core", "", "unknown level '" + std::string(s) + "'");
}

BBox normalize_bbox(const PixelBox& raw, int page_w, int page_h,
                    std::string_view doc_id) {
  if (page_w <= 0 || page_h <= 0)
    throw Error("core", std::string(doc_id), "page size must be positive");
  bool ok = 0 <= raw.x1 && raw.x1 <= raw.x2 && raw.x2 <= page_w && 0 <= raw.y1 &&
            raw.y1 <= raw.y2 && raw.y2 <= page_h;
  if (!ok)
    throw Error("core", std::string(doc_id),
                "box " + fmt_pixel(raw) + " is inverted or outside the " +
                    std::to_string(page_w) + "x" + std::to_string(page_h) + " page");
  return BBox{scale_coord(raw.x1, page_w), scale_coord(raw.y1, page_h),
              scale_coord(raw.x2, page_w), scale_coord(raw.y2, page_h)};
}

BBox union_bbox(std::span<const BBox> boxes) {
  if (boxes.empty()) throw Error("core", "", "union of an empty box list (no relevant sentence matched)");
  BBox u = boxes.front();
  for (const auto& b : boxes.subspan(1)) {
    u.x1 = std::min(u.x1, b.x1);
    u.y1 = std::min(u.y1, b.y1);
    u.x2 = std::max(u.x2, b.x2);
    u.y2 = std::max(u.y2, b.y2);
  }
  return u;
}

std::vector<TextSegment> reading_order_sort(std::vector<TextSegment> segments) {
  std::stable_sort(segments.begin(), segments.end(),
                   [](const TextSegment& a, const TextSegment& b) {
                     return std::tie(a.box.y1, a.box.x1) < std::tie(b.box.y1, b.box.x1);
                   });
  return segments;
}

std::string box_to_string(const BBox& b) {
  return "[" + std::to_string(b.x1) + "," + std::to_string(b.y1) + "," +
         std::to_string(b.x2) + "," + std::to_string(b.y2) + "]";
}

BBox parse_box(std::string_view s) {
  auto fail = [&] { return Error("core", "", "malformed box '" + std::string(s) + "'"); };
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') throw fail();
  std::string_view body = s.substr(1, s.size() - 2);
  int v[4];
  for (int i = 0; i < 4; ++i) {
    auto comma = body.find(',');
    if ((i < 3) != (comma != std::string_view::npos)) throw fail();
    std::string_view part = i < 3 ? body.substr(0, comma) : body;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v[i]);
    if (ec != std::errc{} || ptr != part.data() + part.size()) throw fail();
    if (i < 3) body.remove_prefix(comma + 1);
  }
  BBox b{v[0], v[1], v[2], v[3]};
  if (!b.valid()) throw fail();
  return b;
}

std::string escape_segment_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '<': out += "\\<"; break;
      case '>': out += "\\>"; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_segment_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '>' || c == '<')
      throw Error("core", "", "unescaped '" + std::string(1, c) + "' in segment text");
    if (c != '\\') {
      out += c;
      continue;
    }
    if (++i == text.size()) throw Error("core", "", "dangling escape in segment text");
    switch (text[i]) {
      case '\\': out += '\\'; break;
      case '<': out += '<'; break;
      case '>': out += '>'; break;
      case 'n': out += '\n'; break;
      default:
        throw Error("core", "", std::string("unknown escape \\") + text[i]);
    }
  }
  return out;
}

std::string serialize_segment(const TextSegment& seg) {
  return "<" + box_to_string(seg.box) + ", " + escape_segment_text(seg.text) + ">";
}

TextSegment parse_segment(std::string_view line) {
  if (line.size() < 2 || line.front() != '<' || line.back() != '>')
    throw Error("core", "", "malformed segment '" + std::string(line) + "'");
  auto close = line.find(']');
  if (close == std::string_view::npos || line.substr(close + 1, 2) != ", ")
    throw Error("core", "", "malformed segment '" + std::string(line) + "'");
  TextSegment seg;
  seg.box = parse_box(line.substr(1, close));
  std::string_view body = line.substr(close + 3, line.size() - close - 4);
  seg.text = unescape_segment_text(body);
  return seg;
}

std::string layout_text_entry(const TextSegment& seg) {
  std::string out = "{text:\"";
  for (char c : seg.text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  out += "\", box:" + box_to_string(seg.box) + "}";
  return out;
}

std::string render_layout_text(std::span<const TextSegment> segments) {
  std::string out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i) out += '\n';
    out += layout_text_entry(segments[i]);
  }
  return out;
}

std::vector<TextSegment> parse_layout_text(std::string_view body) {
  std::vector<TextSegment> out;
  std::size_t pos = 0;
  auto fail = [&](const char* why) {
    return Error("core", "", std::string("malformed layout text: ") + why);
  };
  while (pos < body.size()) {
    if (body[pos] == '\n') {
      ++pos;
      continue;
    }
    if (body.substr(pos, 7) != "{text:\"") throw fail("expected {text:\"");
    pos += 7;
    TextSegment seg;
    bool closed = false;
    while (pos < body.size()) {
      char c = body[pos++];
      if (c == '"') {
        closed = true;
        break;
      }
      if (c == '\\') {
        if (pos >= body.size()) throw fail("dangling escape");
        char e = body[pos++];
        if (e == 'n') seg.text += '\n';
        else if (e == '"' || e == '\\') seg.text += e;
        else throw fail("unknown escape");
      } else {
        seg.text += c;
      }
    }
    if (!closed) throw fail("unterminated text");
    if (body.substr(pos, 6) != ", box:") throw fail("expected , box:");
    pos += 6;
    auto close = body.find(']', pos);
    if (close == std::string_view::npos) throw fail("unterminated box");
    seg.box = parse_box(body.substr(pos, close - pos + 1));
    pos = close + 1;
    if (pos >= body.size() || body[pos] != '}') throw fail("expected }");
    ++pos;
    out.push_back(std::move(seg));
  }
  return out;
}

TruncateResult truncate_document(const DocumentRecord& doc, std::size_t max_tokens) {
  TruncateResult result{doc, false};
  result.doc.segments.clear();
  std::size_t used = 0;
  for (const auto& seg : doc.segments) {
    std::size_t n = text::word_count(seg.text);
    if (used + n > max_tokens) {
      if (result.doc.segments.empty()) {
        result.doc.segments.push_back(seg);
        result.overflow = true;
      }
      break;
    }
    used += n;
    result.doc.segments.push_back(seg);
  }
  return result;
}

std::string validate_document(const DocumentRecord& doc) {
  if (doc.doc_id.empty()) return "empty doc_id";
  if (doc.page_w <= 0 || doc.page_h <= 0) return "non-positive page size";
  for (const auto& s : doc.segments) {
    if (!s.box.valid()) return "invalid segment box " + box_to_string(s.box);
    if (s.masked_text && s.zeroed_box) return "segment both masked and zeroed";
    if (s.masked_text && s.text != kMaskToken) return "masked segment without mask token";
    if (s.zeroed_box && !s.box.is_zero()) return "zeroed segment with non-zero box";
    if (!s.masked_text && s.text.empty()) return "empty segment text";
  }
  for (const auto& r : doc.regions) {
    if (!r.box.valid()) return "invalid region box " + box_to_string(r.box);
    if (r.kind.empty()) return "empty region label";
  }
  if (doc.table) {
    const auto& t = *doc.table;
    if (t.n_rows <= 0 || t.n_cols <= 0) return "table without rows or columns";
    std::set<std::pair<int, int>> seen;
    for (const auto& c : t.cells) {
      if (c.row < 1 || c.row > t.n_rows || c.col < 1 || c.col > t.n_cols)
        return "table cell outside grid";
      if (!seen.emplace(c.row, c.col).second) return "duplicate table cell";
      if (c.box && !c.box->valid()) return "invalid table cell box";
    }
  }
  return {};
}

}  // namespace layoutinstruct
