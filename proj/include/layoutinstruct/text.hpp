#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by ingestion, matching, and the metrics.
// Case folding is ASCII-only; non-ASCII bytes pass through unchanged.
namespace layoutinstruct::text {

std::string casefold(std::string_view s);
std::string trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::string strip_edge_punctuation(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::size_t word_count(std::string_view s);

/// Decodes UTF-8 into code points. Invalid bytes decode as U+FFFD so that
/// edit distances stay defined on arbitrary input.
std::u32string utf8_decode(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);
std::string replace_all(std::string s, std::string_view from, std::string_view to);

}  // namespace layoutinstruct::text
