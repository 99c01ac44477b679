#include "layoutinstruct/assembler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <set>
#include <tuple>

#include "layoutinstruct/pretrain_doc.hpp"
#include "layoutinstruct/random.hpp"
#include "layoutinstruct/text.hpp"

namespace layoutinstruct {

Ratio Ratio::parse(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> parts;  // integer, fraction digits
  std::size_t max_frac = 0;
  std::size_t start = 0;
  while (true) {
    auto end = text.find(':', start);
    std::string part = text::trim(text.substr(start, end == std::string_view::npos ? end : end - start));
    auto dot = part.find('.');
    std::string ip = part.substr(0, dot), fp = dot == std::string::npos ? "" : part.substr(dot + 1);
    auto digits = [](const std::string& s) {
      return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
    };
    if ((ip.empty() && fp.empty()) || !digits(ip) || !digits(fp))
      throw Error("assembler", std::string(text), "malformed ratio part '" + part + "'");
    max_frac = std::max(max_frac, fp.size());
    parts.emplace_back(ip.empty() ? "0" : ip, fp);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  if (max_frac > 9) throw Error("assembler", std::string(text), "too many decimal places");
  Ratio r;
  for (auto& [ip, fp] : parts) {
    fp.append(max_frac - fp.size(), '0');
    r.weights.push_back(std::stoull(ip + fp));
  }
  if (r.sum() == 0) throw Error("assembler", std::string(text), "ratio sums to zero");
  return r;
}

std::uint64_t Ratio::sum() const {
  return std::accumulate(weights.begin(), weights.end(), std::uint64_t{0});
}

std::vector<std::uint64_t> apportion(const Ratio& ratio, std::uint64_t total) {
  const std::uint64_t denom = ratio.sum();
  if (denom == 0) throw Error("assembler", "", "ratio sums to zero");
  const std::size_t n = ratio.weights.size();
  std::vector<std::uint64_t> quotas(n);
  std::vector<unsigned __int128> remainders(n);
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    unsigned __int128 num = static_cast<unsigned __int128>(total) * ratio.weights[i];
    quotas[i] = static_cast<std::uint64_t>(num / denom);
    remainders[i] = num % denom;
    assigned += quotas[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::uint64_t k = 0; assigned < total; ++k, ++assigned) ++quotas[order[k % n]];
  return quotas;
}

std::vector<InstructionRecord> mix_by_ratio(const std::vector<std::vector<InstructionRecord>>& streams,
                                            const Ratio& ratio, std::uint64_t total,
                                            std::uint64_t seed, const MixOptions& options) {
  if (streams.size() != ratio.weights.size())
    throw Error("assembler", "", "ratio has " + std::to_string(ratio.weights.size()) +
                                     " parts for " + std::to_string(streams.size()) + " streams");
  auto quotas = apportion(ratio, total);
  auto name = [&](std::size_t i) {
    return i < options.stream_names.size() ? options.stream_names[i] : "stream " + std::to_string(i);
  };
  std::vector<InstructionRecord> out;
  out.reserve(total);
  for (std::size_t i = 0; i < streams.size(); ++i) {
    const auto& stream = streams[i];
    if (quotas[i] == 0) continue;
    Rng rng(derive_seed(seed, name(i), "mix", i));
    if (quotas[i] > stream.size()) {
      if (!options.with_replacement || stream.empty())
        throw Error("assembler", name(i),
                    "needs " + std::to_string(quotas[i]) + " records but has " +
                        std::to_string(stream.size()));
      for (std::uint64_t k = 0; k < quotas[i]; ++k) out.push_back(stream[rng.below(stream.size())]);
      continue;
    }
    for (std::size_t idx : rng.sample_indices(stream.size(), quotas[i])) out.push_back(stream[idx]);
  }
  Rng shuffler(derive_seed(seed, "", "shuffle"));
  shuffler.shuffle(std::span<InstructionRecord>(out));
  return out;
}

std::vector<InstructionRecord> dedup(const std::vector<InstructionRecord>& records) {
  std::set<std::tuple<Task, std::string, std::string, std::string>> seen;
  std::vector<InstructionRecord> out;
  for (const auto& r : records)
    if (seen.emplace(r.task, r.doc_id, r.question, r.answer).second) out.push_back(r);
  return out;
}

std::string to_jsonl(const std::vector<InstructionRecord>& records) {
  std::string out;
  for (const auto& r : records) out += dump_line(Json(r)) + "\n";
  return out;
}

void emit_jsonl(const std::vector<InstructionRecord>& records, const std::filesystem::path& path) {
  write_file_atomic(path, to_jsonl(records));
}

std::vector<InstructionRecord> read_jsonl(const std::filesystem::path& path) {
  std::vector<InstructionRecord> out;
  for (const auto& line : read_lines(path)) out.push_back(Json::parse(line).get<InstructionRecord>());
  return out;
}

Json StatsReport::to_json() const {
  Json j = Json::object();
  j["total"] = total;
  j["by_level"] = by_level;
  j["by_task"] = by_task;
  j["by_source"] = by_source;
  Json words = Json::object();
  for (const auto& [task, s] : answer_words) {
    Json w = Json::object();
    w["count"] = s.count;
    w["mean"] = s.mean;
    w["p50"] = s.p50;
    w["p90"] = s.p90;
    w["max"] = s.max;
    words[task] = std::move(w);
  }
  j["answer_words"] = std::move(words);
  j["ddd_over_cap"] = ddd_over_cap;
  return j;
}

namespace {

// Nearest-rank percentile over a sorted sample.
double percentile(const std::vector<std::size_t>& sorted, double p) {
  if (sorted.empty()) return 0;
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
  return static_cast<double>(sorted[std::max<std::size_t>(rank, 1) - 1]);
}

}  // namespace

StatsReport dataset_stats(const std::vector<InstructionRecord>& records) {
  StatsReport report;
  for (Level l : {Level::document, Level::region, Level::segment, Level::sft})
    report.by_level[std::string(to_string(l))] = 0;
  std::map<std::string, std::vector<std::size_t>> lengths;
  for (const auto& r : records) {
    ++report.total;
    ++report.by_level[std::string(to_string(r.level))];
    ++report.by_task[std::string(to_string(r.task))];
    ++report.by_source[r.source];
    std::size_t words = text::word_count(r.answer);
    lengths[std::string(to_string(r.task))].push_back(words);
    if (r.task == Task::ddd && words >= static_cast<std::size_t>(kDddWordCap)) ++report.ddd_over_cap;
  }
  for (auto& [task, v] : lengths) {
    std::sort(v.begin(), v.end());
    LengthStats s;
    s.count = v.size();
    s.mean = static_cast<double>(std::accumulate(v.begin(), v.end(), std::size_t{0})) /
             static_cast<double>(v.size());
    s.p50 = percentile(v, 50);
    s.p90 = percentile(v, 90);
    s.max = v.back();
    report.answer_words[task] = s;
  }
  return report;
}

}  // namespace layoutinstruct
