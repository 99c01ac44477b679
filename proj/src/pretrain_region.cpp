#include "layoutinstruct/pretrain_region.hpp"

#include <algorithm>
#include <map>

#include "layoutinstruct/core.hpp"
#include "layoutinstruct/pretrain_doc.hpp"
#include "layoutinstruct/random.hpp"
#include "layoutinstruct/text.hpp"

namespace layoutinstruct {

namespace {

InstructionRecord base_record(const DocumentRecord& doc, Task task, std::uint64_t seed) {
  InstructionRecord rec;
  rec.task = task;
  rec.level = level_of(task);
  rec.doc_id = doc.doc_id;
  rec.image_ref = doc.image_ref;
  rec.input_segments = doc.segments;
  rec.seed = seed;
  rec.source = doc.source;
  rec.id = make_record_id(doc.doc_id, task, seed);
  return rec;
}

}  // namespace

std::vector<std::string> region_kinds(const DocumentRecord& doc) {
  std::vector<std::string> kinds;
  for (const auto& r : doc.regions)
    if (std::find(kinds.begin(), kinds.end(), r.kind) == kinds.end()) kinds.push_back(r.kind);
  return kinds;
}

InstructionRecord build_dla_locate(const DocumentRecord& doc, std::string_view kind,
                                   std::uint64_t seed, const TemplateBank& bank) {
  std::vector<BBox> boxes;
  for (const auto& r : doc.regions)
    if (r.kind == kind) boxes.push_back(r.box);
  if (boxes.empty())
    throw SkipRecord("pretrain-region", doc.doc_id, "no region of kind '" + std::string(kind) + "'");
  std::stable_sort(boxes.begin(), boxes.end(), [](const BBox& a, const BBox& b) {
    return std::tie(a.y1, a.x1) < std::tie(b.y1, b.x1);
  });
  Rng rng(seed);
  auto rec = base_record(doc, Task::dla_locate, seed);
  rec.question = substitute(rng.pick(bank.questions("dla_locate")), {{"kind", std::string(kind)}});
  std::vector<std::string> lines;
  for (const auto& b : boxes) lines.push_back(box_to_string(b));
  rec.answer = text::join(lines, "\n");
  return rec;
}

InstructionRecord build_dla_classify(const DocumentRecord& doc, std::size_t region_index,
                                     std::uint64_t seed, const TemplateBank& bank) {
  if (region_index >= doc.regions.size())
    throw Error("pretrain-region", doc.doc_id,
                "region index " + std::to_string(region_index) + " out of range");
  const auto& region = doc.regions[region_index];
  Rng rng(seed);
  auto rec = base_record(doc, Task::dla_classify, seed);
  rec.question = substitute(rng.pick(bank.questions("dla_classify")),
                            {{"box", box_to_string(region.box)}});
  rec.answer = region.kind;
  return rec;
}

InstructionRecord build_tu(const DocumentRecord& doc, TuKind kind, std::uint64_t seed,
                           const TemplateBank& bank) {
  if (!doc.table) throw Error("pretrain-region", doc.doc_id, "document has no table annotation");
  const TableAnnotation& table = *doc.table;
  Rng rng(seed);

  if (kind == TuKind::shape) {
    auto rec = base_record(doc, Task::tu_shape, seed);
    rec.question = substitute(rng.pick(bank.questions("tu_shape")), {});
    rec.answer = std::to_string(table.n_rows) + " rows and " + std::to_string(table.n_cols) + " columns";
    return rec;
  }

  if (kind == TuKind::logical) {
    std::map<std::string, int> counts;
    for (const auto& c : table.cells)
      if (!c.text.empty()) ++counts[c.text];
    const std::size_t n = table.cells.size();
    const std::size_t start = rng.below(n);
    for (std::size_t k = 0; k < n; ++k) {
      const TableCell& cell = table.cells[(start + k) % n];
      if (cell.text.empty() || counts[cell.text] != 1) continue;
      auto rec = base_record(doc, Task::tu_logical, seed);
      rec.question = substitute(rng.pick(bank.questions("tu_logical")), {{"text", cell.text}});
      rec.answer = "row " + std::to_string(cell.row) + ", column " + std::to_string(cell.col);
      return rec;
    }
    throw SkipRecord("pretrain-region", doc.doc_id, "no table cell with unique text");
  }

  const bool by_row = rng.coin();
  const int lines = by_row ? table.n_rows : table.n_cols;
  const int first = static_cast<int>(rng.below(static_cast<std::uint64_t>(lines))) + 1;
  for (int k = 0; k < lines; ++k) {
    int index = (first - 1 + k) % lines + 1;
    std::vector<const TableCell*> cells;
    for (const auto& c : table.cells)
      if ((by_row ? c.row : c.col) == index && !c.text.empty()) cells.push_back(&c);
    if (cells.empty()) continue;
    std::sort(cells.begin(), cells.end(), [by_row](const TableCell* a, const TableCell* b) {
      return by_row ? a->col < b->col : a->row < b->row;
    });
    std::vector<std::string> texts;
    for (const auto* c : cells) texts.push_back(c->text);
    auto rec = base_record(doc, Task::tu_content, seed);
    rec.question = substitute(rng.pick(bank.questions(by_row ? "tu_row" : "tu_col")),
                              {{"index", std::to_string(index)}});
    rec.answer = text::join(texts, " | ");
    return rec;
  }
  throw SkipRecord("pretrain-region", doc.doc_id, "table has no non-empty cells");
}

}  // namespace layoutinstruct
