#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "layoutinstruct/templates.hpp"
#include "layoutinstruct/types.hpp"

namespace layoutinstruct {

/// Asks for every region of `kind`; the answer lists their boxes in reading
/// order, one `[x1,y1,x2,y2]` per line. SkipRecord if the kind is absent.
InstructionRecord build_dla_locate(const DocumentRecord& doc, std::string_view kind,
                                   std::uint64_t seed,
                                   const TemplateBank& bank = TemplateBank::builtin());

/// Asks for the label of region `region_index`. Throws Error on a bad index.
InstructionRecord build_dla_classify(const DocumentRecord& doc, std::size_t region_index,
                                     std::uint64_t seed,
                                     const TemplateBank& bank = TemplateBank::builtin());

enum class TuKind { shape, logical, content };

/// Table understanding over doc.table:
///   shape   -> "R rows and C columns"
///   logical -> "row r, column c" for a seeded cell with unique text
///   content -> texts of a seeded row or column in logical order, " | "-joined;
///              an empty line moves on to the next index.
InstructionRecord build_tu(const DocumentRecord& doc, TuKind kind, std::uint64_t seed,
                           const TemplateBank& bank = TemplateBank::builtin());

/// Distinct region kinds of a document, in first-appearance order.
std::vector<std::string> region_kinds(const DocumentRecord& doc);

}  // namespace layoutinstruct
