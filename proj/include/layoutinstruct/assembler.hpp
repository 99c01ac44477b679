#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "layoutinstruct/json_io.hpp"
#include "layoutinstruct/types.hpp"

namespace layoutinstruct {

/// Mixing ratio held as exact integer weights. "5:4.5:0.5" parses to
/// {50, 45, 5}: every part is scaled by the same power of ten.
struct Ratio {
  std::vector<std::uint64_t> weights;

  static Ratio parse(std::string_view text);
  std::uint64_t sum() const;
};

/// Largest-remainder apportionment: floor every exact share, then hand the
/// leftover units out by descending remainder, ties to the lower index.
/// Quotas sum to `total` exactly.
std::vector<std::uint64_t> apportion(const Ratio& ratio, std::uint64_t total);

struct MixOptions {
  bool with_replacement = false;
  std::vector<std::string> stream_names;  // used in error messages
};

/// Samples each stream's quota (seeded, without replacement unless allowed)
/// and returns the union shuffled with the same seed.
std::vector<InstructionRecord> mix_by_ratio(const std::vector<std::vector<InstructionRecord>>& streams,
                                            const Ratio& ratio, std::uint64_t total,
                                            std::uint64_t seed, const MixOptions& options = {});

/// Keeps the first record of every (task, doc_id, question, answer).
std::vector<InstructionRecord> dedup(const std::vector<InstructionRecord>& records);

std::string to_jsonl(const std::vector<InstructionRecord>& records);
/// One object per line in input order; the file is replaced atomically and no
/// partial file is left behind on failure.
void emit_jsonl(const std::vector<InstructionRecord>& records, const std::filesystem::path& path);
std::vector<InstructionRecord> read_jsonl(const std::filesystem::path& path);

struct LengthStats {
  std::size_t count = 0;
  double mean = 0;
  double p50 = 0;
  double p90 = 0;
  std::size_t max = 0;
};

struct StatsReport {
  std::size_t total = 0;
  std::map<std::string, std::size_t> by_level;
  std::map<std::string, std::size_t> by_task;
  std::map<std::string, std::size_t> by_source;
  /// Answer length in whitespace words, per task.
  std::map<std::string, LengthStats> answer_words;
  /// DDD answers above the word cap given to the service (kept, reported).
  std::size_t ddd_over_cap = 0;

  Json to_json() const;
};

StatsReport dataset_stats(const std::vector<InstructionRecord>& records);

}  // namespace layoutinstruct
