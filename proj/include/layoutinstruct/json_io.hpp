#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "layoutinstruct/types.hpp"

namespace layoutinstruct {

/// Insertion-ordered JSON so that emitted lines have a fixed field order.
using Json = nlohmann::ordered_json;

void to_json(Json& j, const BBox& b);
void from_json(const Json& j, BBox& b);
void to_json(Json& j, const TextSegment& s);
void from_json(const Json& j, TextSegment& s);
void to_json(Json& j, const LayoutRegion& r);
void from_json(const Json& j, LayoutRegion& r);
void to_json(Json& j, const TableAnnotation& t);
void from_json(const Json& j, TableAnnotation& t);
void to_json(Json& j, const VIEAnnotation& v);
void from_json(const Json& j, VIEAnnotation& v);
void to_json(Json& j, const DocumentRecord& d);
void from_json(const Json& j, DocumentRecord& d);
void to_json(Json& j, const MRCItem& m);
void from_json(const Json& j, MRCItem& m);
void to_json(Json& j, const LayoutCoTRecord& c);
void from_json(const Json& j, LayoutCoTRecord& c);
void to_json(Json& j, const InstructionRecord& r);
void from_json(const Json& j, InstructionRecord& r);

/// Compact single-line dump used for every JSONL file.
std::string dump_line(const Json& j);

std::string read_file(const std::filesystem::path& path);
/// Non-empty lines of a text file, in order.
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames it into place; on failure
/// the partial file is removed and Error is thrown.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace layoutinstruct
