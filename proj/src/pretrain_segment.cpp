#include "layoutinstruct/pretrain_segment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "layoutinstruct/core.hpp"
#include "layoutinstruct/pretrain_doc.hpp"
#include "layoutinstruct/random.hpp"
#include "layoutinstruct/text.hpp"

namespace layoutinstruct {

Point box_center(const BBox& b) { return Point{(b.x1 + b.x2) / 2.0, (b.y1 + b.y2) / 2.0}; }

int direction_sector(Point from, Point to) {
  const double dx = to.x - from.x;
  const double dy = from.y - to.y;  // flip: positive means upward on the page
  if (dx == 0 && dy == 0) throw Error("pretrain-segment", "", "coincident centers have no direction");
  double deg = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
  if (deg < 0) deg += 360.0;
  return static_cast<int>(std::floor((deg + 22.5) / 45.0)) % 8;
}

std::string_view direction_label(Point from, Point to) {
  return kDirections[direction_sector(from, to)];
}

double center_distance(Point a, Point b) { return std::hypot(b.x - a.x, b.y - a.y); }

long reported_distance(Point a, Point b) { return std::lround(center_distance(a, b)); }

std::size_t mask_count(std::size_t n_segments, double mask_rate) {
  // The epsilon keeps exact halves (0.15 * 10) from rounding down after
  // binary representation error.
  auto k = static_cast<std::size_t>(std::floor(mask_rate * static_cast<double>(n_segments) + 0.5 + 1e-9));
  return std::max<std::size_t>(1, k);
}

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

std::map<std::string, int> text_counts(const DocumentRecord& doc) {
  std::map<std::string, int> counts;
  for (const auto& s : doc.segments) ++counts[s.text];
  return counts;
}

std::string quote(std::string_view s) { return "\"" + std::string(s) + "\""; }

}  // namespace

InstructionRecord build_mvlm(const DocumentRecord& doc, double mask_rate, std::uint64_t seed,
                             const TemplateBank& bank) {
  const std::size_t n = doc.segments.size();
  if (n < 2) throw SkipRecord("pretrain-segment", doc.doc_id, "MVLM needs at least two segments");
  Rng rng(seed);
  auto chosen = rng.sample_indices(n, mask_count(n, mask_rate));
  std::sort(chosen.begin(), chosen.end());
  auto rec = base_record(doc, Task::mvlm, seed);
  std::vector<std::string> lines;
  for (std::size_t i : chosen) {
    lines.push_back(serialize_segment(TextSegment{doc.segments[i].text, doc.segments[i].box}));
    rec.input_segments[i].text = std::string(kMaskToken);
    rec.input_segments[i].masked_text = true;
  }
  rec.question = substitute(rng.pick(bank.questions("mvlm")), {});
  rec.answer = text::join(lines, "\n");
  return rec;
}

InstructionRecord build_mask_position(const DocumentRecord& doc, std::size_t k,
                                      std::uint64_t seed, const TemplateBank& bank) {
  const std::size_t n = doc.segments.size();
  if (k == 0 || n <= k)
    throw SkipRecord("pretrain-segment", doc.doc_id, "position masking needs more than k segments");
  Rng rng(seed);
  auto counts = text_counts(doc);
  auto order = rng.sample_indices(n, n);
  std::vector<std::size_t> chosen;
  for (std::size_t i : order) {
    if (counts[doc.segments[i].text] != 1) continue;  // ambiguous in the question
    chosen.push_back(i);
    if (chosen.size() == k) break;
  }
  if (chosen.size() < k)
    throw SkipRecord("pretrain-segment", doc.doc_id, "not enough segments with unique text");
  std::sort(chosen.begin(), chosen.end());

  auto rec = base_record(doc, Task::mask_pos, seed);
  std::vector<std::string> quoted, lines;
  for (std::size_t i : chosen) {
    quoted.push_back(quote(doc.segments[i].text));
    lines.push_back(serialize_segment(TextSegment{doc.segments[i].text, doc.segments[i].box}));
    rec.input_segments[i].box = BBox{};
    rec.input_segments[i].zeroed_box = true;
  }
  rec.question = substitute(rng.pick(bank.questions("mask_position")),
                            {{"texts", text::join(quoted, ", ")}});
  rec.answer = text::join(lines, "\n");
  return rec;
}

std::string geometric_answer(std::string_view a_text, std::string_view b_text,
                             std::string_view direction, long distance) {
  return quote(b_text) + " is located in the " + std::string(direction) + " direction of " +
         quote(a_text) + ". The distance between their centers is " + std::to_string(distance) + ".";
}

InstructionRecord build_geometric(const DocumentRecord& doc, std::uint64_t seed,
                                  const TemplateBank& bank) {
  const std::size_t n = doc.segments.size();
  if (n < 2) throw SkipRecord("pretrain-segment", doc.doc_id, "geometry needs two segments");
  auto counts = text_counts(doc);
  auto usable = [&](std::size_t i, std::size_t j) {
    const auto& a = doc.segments[i];
    const auto& b = doc.segments[j];
    if (i == j || counts[a.text] != 1 || counts[b.text] != 1) return false;
    Point pa = box_center(a.box), pb = box_center(b.box);
    return pa.x != pb.x || pa.y != pb.y;
  };

  Rng rng(seed);
  std::size_t ai = n, bi = n;
  for (int attempt = 0; attempt < 32 && ai == n; ++attempt) {
    std::size_t i = rng.below(n), j = rng.below(n);
    if (usable(i, j)) ai = i, bi = j;
  }
  if (ai == n) {
    // Resampling kept failing; scan every ordered pair from a seeded offset.
    const std::size_t offset = rng.below(n * n);
    for (std::size_t k = 0; k < n * n && ai == n; ++k) {
      std::size_t p = (offset + k) % (n * n);
      if (usable(p / n, p % n)) ai = p / n, bi = p % n;
    }
  }
  if (ai == n) throw SkipRecord("pretrain-segment", doc.doc_id, "no segment pair with distinct centers");

  const auto& a = doc.segments[ai];
  const auto& b = doc.segments[bi];
  Point pa = box_center(a.box), pb = box_center(b.box);
  auto rec = base_record(doc, Task::geometric, seed);
  rec.question = substitute(rng.pick(bank.questions("geometric")), {{"a", a.text}, {"b", b.text}});
  rec.answer = geometric_answer(a.text, b.text, direction_label(pa, pb), reported_distance(pa, pb));
  return rec;
}

}  // namespace layoutinstruct
