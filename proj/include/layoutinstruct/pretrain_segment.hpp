#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "layoutinstruct/templates.hpp"
#include "layoutinstruct/types.hpp"

namespace layoutinstruct {

inline constexpr double kDefaultMaskRate = 0.15;

/// Eight compass labels, counterclockwise from "right".
inline constexpr std::array<std::string_view, 8> kDirections = {
    "right", "upper right", "up", "upper left", "left", "lower left", "down", "lower right"};

struct Point {
  double x = 0;
  double y = 0;
};

Point box_center(const BBox& b);

/// Sector index (into kDirections) of `to` seen from `from`. Page y grows
/// downward, so "up" means smaller y. Sectors are 45 degrees wide and centered
/// on the axes; an angle exactly on a boundary belongs to the counterclockwise
/// sector. Throws Error when the points coincide.
int direction_sector(Point from, Point to);
std::string_view direction_label(Point from, Point to);

/// Euclidean distance in normalized page units, unrounded.
double center_distance(Point a, Point b);
/// Distance as stated in answers: rounded half away from zero.
long reported_distance(Point a, Point b);

/// max(1, round_half_up(rate * n)).
std::size_t mask_count(std::size_t n_segments, double mask_rate);

/// Masked visual-language modeling: k segments have their text replaced by
/// [MASK]; the answer gives `<[box], original>` per masked segment in reading
/// order. SkipRecord for documents with fewer than two segments.
InstructionRecord build_mvlm(const DocumentRecord& doc, double mask_rate, std::uint64_t seed,
                             const TemplateBank& bank = TemplateBank::builtin());

/// Position masking: k segments with document-unique text get a zero box; the
/// answer restores `<[box], text>` for each.
InstructionRecord build_mask_position(const DocumentRecord& doc, std::size_t k,
                                      std::uint64_t seed,
                                      const TemplateBank& bank = TemplateBank::builtin());

/// Direction and distance between two segments named by their (unique) text.
InstructionRecord build_geometric(const DocumentRecord& doc, std::uint64_t seed,
                                  const TemplateBank& bank = TemplateBank::builtin());

/// Answer sentence used by build_geometric.
std::string geometric_answer(std::string_view a_text, std::string_view b_text,
                             std::string_view direction, long distance);

}  // namespace layoutinstruct
