#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "layoutinstruct/types.hpp"

namespace layoutinstruct {

/// Maps a pixel box onto the 0-1000 page grid: round(v / dim * 1000), clamped.
/// Throws Error when the raw box is inverted, negative, or exceeds the page.
BBox normalize_bbox(const PixelBox& raw, int page_w, int page_h,
                    std::string_view doc_id = {});

/// Smallest box containing every input. Throws Error("core", ...) on an empty
/// list, which callers treat as "no relevant sentence matched".
BBox union_bbox(std::span<const BBox> boxes);

/// Stable sort by (y1, x1).
std::vector<TextSegment> reading_order_sort(std::vector<TextSegment> segments);

std::string box_to_string(const BBox& b);
/// Parses `[x1,y1,x2,y2]`; throws on malformed or invalid boxes.
BBox parse_box(std::string_view s);

// Angle-bracket serialization `<[x1,y1,x2,y2], text>`. Inside the text a
// backslash escapes `\`, `<` and `>`; newlines are written as `\n`.
std::string escape_segment_text(std::string_view text);
std::string unescape_segment_text(std::string_view text);
std::string serialize_segment(const TextSegment& seg);
TextSegment parse_segment(std::string_view line);

// Layout-text rendering `{text:"...", box:[x1,y1,x2,y2]}`, one entry per line.
// Inside the quotes `"` and `\` are backslash-escaped and newlines become `\n`.
std::string layout_text_entry(const TextSegment& seg);
std::string render_layout_text(std::span<const TextSegment> segments);
std::vector<TextSegment> parse_layout_text(std::string_view body);

struct TruncateResult {
  DocumentRecord doc;
  /// True when the first segment alone exceeds the budget and was kept anyway.
  bool overflow = false;
};

/// Keeps the longest reading-order prefix of whole segments whose cumulative
/// whitespace word count fits in `max_tokens`.
TruncateResult truncate_document(const DocumentRecord& doc,
                                 std::size_t max_tokens = 512);

/// Checks every core invariant of a record; returns a description of the first
/// violation, or an empty string.
std::string validate_document(const DocumentRecord& doc);

}  // namespace layoutinstruct
