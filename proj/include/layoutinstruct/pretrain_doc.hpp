#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "layoutinstruct/llm_client.hpp"
#include "layoutinstruct/templates.hpp"
#include "layoutinstruct/types.hpp"

namespace layoutinstruct {

/// Word cap stated to the generation service in the description prompt.
inline constexpr int kDddWordCap = 500;

enum class TlrFormat { angle, structured, markdown };
std::string_view to_string(TlrFormat f);
TlrFormat tlr_format_from_string(std::string_view s);

/// `<doc_id>/<task>/<seed as 16 hex digits>`.
std::string make_record_id(std::string_view doc_id, Task task, std::uint64_t seed);

/// Prompt asking the service for a dense description of `doc` (layout text form).
std::string render_ddd_prompt(const DocumentRecord& doc, const TemplateBank& bank);

/// Document Dense Description. Throws SkipRecord for documents without
/// segments or when the service fails or answers with nothing.
InstructionRecord build_ddd(const DocumentRecord& doc, TextGenerator& client,
                            std::uint64_t seed,
                            const TemplateBank& bank = TemplateBank::builtin());

/// Text and Layout Reconstruction in the requested output format.
InstructionRecord build_tlr(const DocumentRecord& doc, TlrFormat format, std::uint64_t seed,
                            const TemplateBank& bank = TemplateBank::builtin());

std::string render_tlr_answer(const std::vector<TextSegment>& segments, TlrFormat format);
/// Inverse of render_tlr_answer; throws Error on malformed answers.
std::vector<TextSegment> parse_tlr_answer(const std::string& answer, TlrFormat format);

}  // namespace layoutinstruct
