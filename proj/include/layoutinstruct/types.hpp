#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace layoutinstruct {

/// Literal that replaces a segment's text when it is masked for MVLM.
inline constexpr std::string_view kMaskToken = "[MASK]";

/// Upper bound of the normalized page coordinate system.
inline constexpr int kCoordScale = 1000;

/// Box in normalized page coordinates (thousandths of the page width/height).
struct BBox {
  int x1 = 0;
  int y1 = 0;
  int x2 = 0;
  int y2 = 0;

  bool valid() const {
    return 0 <= x1 && x1 <= x2 && x2 <= kCoordScale && 0 <= y1 && y1 <= y2 &&
           y2 <= kCoordScale;
  }
  bool contains(const BBox& o) const {
    return x1 <= o.x1 && y1 <= o.y1 && o.x2 <= x2 && o.y2 <= y2;
  }
  bool is_zero() const { return x1 == 0 && y1 == 0 && x2 == 0 && y2 == 0; }

  auto operator<=>(const BBox&) const = default;
};

/// Raw box in source pixels, before normalization.
struct PixelBox {
  double x1 = 0;
  double y1 = 0;
  double x2 = 0;
  double y2 = 0;
};

struct TextSegment {
  std::string text;
  BBox box;
  bool masked_text = false;
  bool zeroed_box = false;

  bool operator==(const TextSegment&) const = default;
};

struct LayoutRegion {
  std::string kind;
  BBox box;

  auto operator<=>(const LayoutRegion&) const = default;
};

/// Logical coordinates are 1-based.
struct TableCell {
  int row = 0;
  int col = 0;
  std::string text;
  std::optional<BBox> box;

  bool operator==(const TableCell&) const = default;
};

struct TableAnnotation {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<TableCell> cells;

  const TableCell* find(int row, int col) const {
    for (const auto& c : cells)
      if (c.row == row && c.col == col) return &c;
    return nullptr;
  }
  bool operator==(const TableAnnotation&) const = default;
};

enum class VieVariant { linking, entity };

/// One form entity (FUNSD-style). `label` is the source taxonomy label.
struct VieEntity {
  int entity_id = 0;
  std::string label;
  std::string text;
  BBox box;

  bool operator==(const VieEntity&) const = default;
};

struct VieLink {
  VieEntity key;
  std::vector<int> value_entity_ids;

  bool operator==(const VieLink&) const = default;
};

struct VieTypedEntity {
  std::string etype;
  std::string text;

  bool operator==(const VieTypedEntity&) const = default;
};

struct VIEAnnotation {
  VieVariant variant = VieVariant::entity;
  /// Linking variant: every entity of the form, addressable by entity_id.
  std::vector<VieEntity> form_entities;
  std::vector<VieLink> links;
  /// Entity variant: typed entities in annotation order.
  std::vector<VieTypedEntity> entities;

  const VieEntity* entity(int id) const {
    for (const auto& e : form_entities)
      if (e.entity_id == id) return &e;
    return nullptr;
  }
  bool operator==(const VIEAnnotation&) const = default;
};

struct DocumentRecord {
  std::string doc_id;
  std::optional<std::string> image_ref;
  int page_w = 0;
  int page_h = 0;
  std::vector<TextSegment> segments;
  std::vector<LayoutRegion> regions;
  std::optional<TableAnnotation> table;
  std::optional<VIEAnnotation> vie;
  std::string source;

  bool usable_for_text() const { return !segments.empty(); }
  bool operator==(const DocumentRecord&) const = default;
};

struct MRCItem {
  std::string item_id;
  TableAnnotation table;
  std::string question;
  std::string answer;
  std::vector<std::pair<int, int>> highlighted_cells;
  std::string source;

  bool operator==(const MRCItem&) const = default;
};

struct LayoutCoTRecord {
  std::string step1;
  BBox step2_box;
  std::string step3;

  bool operator==(const LayoutCoTRecord&) const = default;
};

enum class Task {
  ddd,
  tlr,
  dla_locate,
  dla_classify,
  tu_shape,
  tu_logical,
  tu_content,
  mvlm,
  mask_pos,
  geometric,
  cot_qa,
};

enum class Level { document, region, segment, sft };

Level level_of(Task task);
std::string_view to_string(Task task);
std::string_view to_string(Level level);
Task task_from_string(std::string_view s);
Level level_from_string(std::string_view s);

struct InstructionRecord {
  std::string id;
  Task task = Task::ddd;
  Level level = Level::document;
  std::string doc_id;
  std::optional<std::string> image_ref;
  std::vector<TextSegment> input_segments;
  std::string question;
  std::string answer;
  std::optional<LayoutCoTRecord> cot;
  std::uint64_t seed = 0;
  std::string source;

  bool operator==(const InstructionRecord&) const = default;
};

/// Base error. `module` names the component that raised it; `context` usually
/// carries the doc_id or file being processed.
class Error : public std::runtime_error {
 public:
  Error(std::string module, std::string context, const std::string& what)
      : std::runtime_error(format(module, context, what)),
        module_(std::move(module)),
        context_(std::move(context)) {}

  const std::string& module() const { return module_; }
  const std::string& context() const { return context_; }

 private:
  static std::string format(const std::string& m, const std::string& c,
                            const std::string& w) {
    std::string out = "[" + m + "]";
    if (!c.empty()) out += " " + c + ":";
    return out + " " + w;
  }
  std::string module_;
  std::string context_;
};

/// Raised by builders when a document cannot yield the requested record (for
/// example no region of the asked kind). Callers count it and move on.
class SkipRecord : public Error {
 public:
  SkipRecord(std::string module, std::string context, const std::string& what)
      : Error(std::move(module), std::move(context), what) {}
};

}  // namespace layoutinstruct
