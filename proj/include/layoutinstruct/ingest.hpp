#pragma once

// Adapters from public annotation formats to DocumentRecord / MRCItem.
//
// Accepted inputs (all UTF-8 text, structured-object syntax):
//   OCR      directory of per-page files, generic schema
//            {"doc_id", "page_w", "page_h", "image_ref"?,
//             "segments": [{"text", "box": [x1,y1,x2,y2]}]}   (pixel boxes)
//   layout   one COCO-style file (PubLayNet/DocLayNet export):
//            {"images": [{"id","file_name","width","height"}],
//             "annotations": [{"image_id","category_id","bbox": [x,y,w,h]}],
//             "categories": [{"id","name"}]}
//   table    PubTabNet-style JSONL, one table per line, plus the page size:
//            {"filename","width","height",
//             "html": {"structure": {"tokens": [...]},
//                      "cells": [{"tokens": [...], "bbox"?: [x1,y1,x2,y2]}]}}
//   VIE      linking: directory of FUNSD-style files
//            {"page_w","page_h","form": [{"id","label","text","box","linking"}]}
//            entity: directory of receipt files
//            {"page_w","page_h","segments": [...],
//             "entities": {"type": "text", ...} | [{"type","text"}]}
//   MRC      FeTaQA-style JSONL
//            {"feta_id","table_array": [[...]],"question","answer",
//             "highlighted_cell_ids": [[row,col], ...]}   (0-based)
//
// File-level failures are logged and counted, never thrown. Output order is
// the sorted file-name (or line) order.

#include <filesystem>
#include <string>
#include <vector>

#include "layoutinstruct/types.hpp"

namespace layoutinstruct {

struct LoadReport {
  std::size_t records_in = 0;
  std::size_t records_out = 0;
  std::size_t records_skipped = 0;
  std::size_t warnings = 0;
  std::vector<std::string> messages;

  void skip(std::string why);
  void warn(std::string why);
};

template <typename T>
struct LoadResult {
  std::vector<T> items;
  LoadReport report;
};

/// Parses one generic OCR page. Throws Error on malformed input or invalid boxes.
DocumentRecord load_ocr_page(const std::filesystem::path& file,
                             std::string_view source = "ocr");

LoadResult<DocumentRecord> load_ocr_corpus(const std::filesystem::path& dir,
                                           std::string_view source = "ocr");
LoadResult<DocumentRecord> load_layout_corpus(const std::filesystem::path& file,
                                              std::string_view source = "layout");
LoadResult<DocumentRecord> load_table_corpus(const std::filesystem::path& file,
                                             std::string_view source = "table");
LoadResult<DocumentRecord> load_vie_corpus(const std::filesystem::path& dir,
                                           VieVariant variant,
                                           std::string_view source = {});
LoadResult<MRCItem> load_mrc_corpus(const std::filesystem::path& file,
                                    std::string_view source = "fetaqa");

/// Grid placement of PubTabNet structure tokens. Spanning cells anchor at their
/// top-left logical coordinate. Throws Error on inconsistent structures.
TableAnnotation table_from_structure(const std::vector<std::string>& structure_tokens,
                                     const std::vector<std::string>& cell_texts);

/// Files with `ext` directly inside `dir`, sorted by file name.
std::vector<std::filesystem::path> sorted_files(const std::filesystem::path& dir,
                                                std::string_view ext);

}  // namespace layoutinstruct
