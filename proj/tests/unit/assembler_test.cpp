#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "layoutinstruct/assembler.hpp"
#include "layoutinstruct/json_io.hpp"
#include "layoutinstruct/random.hpp"
#include "support.hpp"

using namespace layoutinstruct;

namespace {

InstructionRecord rec(Task task, std::string doc, std::string q, std::string a, std::string source = "ocr") {
  InstructionRecord r;
  r.task = task;
  r.level = level_of(task);
  r.doc_id = std::move(doc);
  r.question = std::move(q);
  r.answer = std::move(a);
  r.source = std::move(source);
  r.id = r.doc_id + "/" + std::string(to_string(task)) + "/" + r.question;
  r.input_segments = {{"seg", {1, 2, 3, 4}}};
  return r;
}

std::vector<InstructionRecord> stream(Task task, std::size_t n) {
  std::vector<InstructionRecord> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(rec(task, "d" + std::to_string(i), "q", "a"));
  return out;
}

// Quotas by exhaustive check: each is floor or ceil of the exact share and
// the ceilings go to the largest remainders (lower index on ties).
bool is_largest_remainder(const std::vector<std::uint64_t>& w, std::uint64_t total,
                          const std::vector<std::uint64_t>& q) {
  std::uint64_t sum = 0, wsum = 0;
  for (auto x : q) sum += x;
  for (auto x : w) wsum += x;
  if (sum != total) return false;
  std::vector<std::pair<std::uint64_t, std::size_t>> up, down;
  for (std::size_t i = 0; i < w.size(); ++i) {
    unsigned __int128 num = static_cast<unsigned __int128>(w[i]) * total;
    auto fl = static_cast<std::uint64_t>(num / wsum);
    auto rem = static_cast<std::uint64_t>(num % wsum);
    if (q[i] == fl + 1) up.push_back({rem, i});
    else if (q[i] == fl) down.push_back({rem, i});
    else return false;
  }
  for (auto [ru, iu] : up)
    for (auto [rd, id] : down)
      if (rd > ru || (rd == ru && id < iu)) return false;
  return true;
}

}  // namespace

TEST(Ratio, ParsesDecimalParts) {
  EXPECT_EQ(Ratio::parse("1:4:4").weights, (std::vector<std::uint64_t>{1, 4, 4}));
  EXPECT_EQ(Ratio::parse("5:4.5:0.5").weights, (std::vector<std::uint64_t>{50, 45, 5}));
  EXPECT_EQ(Ratio::parse(" 2 : .25 ").weights, (std::vector<std::uint64_t>{200, 25}));
  EXPECT_THROW(Ratio::parse("1::2"), Error);
  EXPECT_THROW(Ratio::parse("a:1"), Error);
  EXPECT_THROW(Ratio::parse("0:0"), Error);
  EXPECT_THROW(Ratio::parse("-1:2"), Error);
  EXPECT_THROW(Ratio::parse("1.0000000001:1"), Error);
}

TEST(Apportion, Examples) {
  EXPECT_EQ(apportion(Ratio::parse("1:4:4"), 9), (std::vector<std::uint64_t>{1, 4, 4}));
  EXPECT_EQ(apportion(Ratio::parse("1:4:4"), 10), (std::vector<std::uint64_t>{1, 5, 4}));
  EXPECT_EQ(apportion(Ratio::parse("5:4.5:0.5"), 300000),
            (std::vector<std::uint64_t>{150000, 135000, 15000}));
  EXPECT_EQ(apportion(Ratio::parse("1:1:1"), 2), (std::vector<std::uint64_t>{1, 1, 0}));
  EXPECT_EQ(apportion(Ratio::parse("1:4:4"), 0), (std::vector<std::uint64_t>{0, 0, 0}));
}

TEST(Apportion, LargestRemainderOnRandomInputs) {
  Rng rng(2024);
  for (int i = 0; i < 5000; ++i) {
    Ratio r;
    const std::size_t n = 1 + rng.below(6);
    for (std::size_t k = 0; k < n; ++k) r.weights.push_back(rng.below(1000));
    if (r.sum() == 0) r.weights[0] = 1;
    const std::uint64_t total = rng.below(1'000'000);
    auto q = apportion(r, total);
    ASSERT_TRUE(is_largest_remainder(r.weights, total, q));
  }
}

TEST(Mix, QuotasAndErrors) {
  std::vector<std::vector<InstructionRecord>> streams{stream(Task::ddd, 5), stream(Task::dla_locate, 20),
                                                      stream(Task::mvlm, 20)};
  auto mixed = mix_by_ratio(streams, Ratio::parse("1:4:4"), 9, 1);
  ASSERT_EQ(mixed.size(), 9u);
  auto stats = dataset_stats(mixed);
  EXPECT_EQ(stats.by_level["document"], 1u);
  EXPECT_EQ(stats.by_level["region"], 4u);
  EXPECT_EQ(stats.by_level["segment"], 4u);
  // Without replacement every picked record is distinct.
  std::set<std::string> ids;
  for (const auto& r : mixed) ids.insert(r.id);
  EXPECT_EQ(ids.size(), 9u);

  MixOptions opts;
  opts.stream_names = {"document", "region", "segment"};
  try {
    mix_by_ratio(streams, Ratio::parse("1:4:4"), 90, 1, opts);
    FAIL();
  } catch (const Error& e) {
    std::string m = e.what();
    EXPECT_NE(m.find("document"), std::string::npos);
    EXPECT_NE(m.find("needs 10 records but has 5"), std::string::npos);
  }
  opts.with_replacement = true;
  EXPECT_EQ(mix_by_ratio(streams, Ratio::parse("1:4:4"), 90, 1, opts).size(), 90u);
  EXPECT_THROW(mix_by_ratio(streams, Ratio::parse("1:4"), 9, 1), Error);
}

TEST(Mix, DeterministicPerSeed) {
  std::vector<std::vector<InstructionRecord>> streams{stream(Task::ddd, 30), stream(Task::dla_locate, 30),
                                                      stream(Task::mvlm, 30)};
  auto a = mix_by_ratio(streams, Ratio::parse("1:4:4"), 45, 7);
  auto b = mix_by_ratio(streams, Ratio::parse("1:4:4"), 45, 7);
  auto c = mix_by_ratio(streams, Ratio::parse("1:4:4"), 45, 8);
  EXPECT_EQ(to_jsonl(a), to_jsonl(b));
  EXPECT_NE(to_jsonl(a), to_jsonl(c));
}

TEST(Dedup, KeepsFirstAndIsIdempotent) {
  std::vector<InstructionRecord> rs{rec(Task::ddd, "d", "q", "a"), rec(Task::ddd, "d", "q", "a"),
                                    rec(Task::ddd, "d", "q2", "a"), rec(Task::tlr, "d", "q", "a")};
  rs[1].seed = 99;
  auto once = dedup(rs);
  ASSERT_EQ(once.size(), 3u);
  EXPECT_EQ(once[0].seed, 0u);
  EXPECT_EQ(to_jsonl(dedup(once)), to_jsonl(once));
}

TEST(Jsonl, EmptyRoundTripAndStableBytes) {
  auto dir = lit::scratch_dir("jsonl");
  emit_jsonl({}, dir / "empty.jsonl");
  EXPECT_TRUE(std::filesystem::exists(dir / "empty.jsonl"));
  EXPECT_EQ(lit::slurp(dir / "empty.jsonl"), "");

  auto rs = stream(Task::geometric, 3);
  rs[1].image_ref = "x.png";
  rs[2].cot = LayoutCoTRecord{"s1 \"quoted\"", {1, 2, 3, 4}, "s3\nline"};
  rs[2].seed = 0xffffffffffffffffull;
  emit_jsonl(rs, dir / "r.jsonl");
  EXPECT_EQ(read_jsonl(dir / "r.jsonl"), rs);
  const auto first = lit::slurp(dir / "r.jsonl");
  emit_jsonl(read_jsonl(dir / "r.jsonl"), dir / "r.jsonl");
  EXPECT_EQ(lit::slurp(dir / "r.jsonl"), first);
  EXPECT_EQ(std::count(first.begin(), first.end(), '\n'), 3);
}

TEST(Jsonl, FailedWriteLeavesNothing) {
  auto dir = lit::scratch_dir("jsonl-fail");
  std::filesystem::create_directories(dir / "out.jsonl" / "occupied");
  EXPECT_THROW(emit_jsonl(stream(Task::ddd, 2), dir / "out.jsonl"), Error);
  EXPECT_FALSE(std::filesystem::exists(dir / "out.jsonl.partial"));
  EXPECT_TRUE(std::filesystem::is_directory(dir / "out.jsonl"));
  // Missing parent directories are created.
  emit_jsonl(stream(Task::ddd, 2), dir / "nested" / "out.jsonl");
  EXPECT_EQ(read_jsonl(dir / "nested" / "out.jsonl").size(), 2u);
}

TEST(Stats, HistogramsAndLengths) {
  std::vector<InstructionRecord> rs = stream(Task::ddd, 1);
  for (auto& r : stream(Task::dla_locate, 4)) rs.push_back(r);
  for (auto& r : stream(Task::mvlm, 4)) rs.push_back(r);
  rs[0].answer = std::string("word ") + std::string(600 * 5, 'x');
  auto s = dataset_stats(rs);
  EXPECT_EQ(s.total, 9u);
  EXPECT_EQ(s.by_level, (std::map<std::string, std::size_t>{{"document", 1}, {"region", 4}, {"segment", 4}, {"sft", 0}}));
  EXPECT_EQ(s.by_task["mvlm"], 4u);
  EXPECT_EQ(s.answer_words["ddd"].count, 1u);
  EXPECT_EQ(s.ddd_over_cap, 0u);

  std::string long_answer;
  for (int i = 0; i < 520; ++i) long_answer += "w ";
  rs[0].answer = long_answer;
  EXPECT_EQ(dataset_stats(rs).ddd_over_cap, 1u);
  EXPECT_EQ(dataset_stats(rs).answer_words["ddd"].max, 520u);

  auto empty = dataset_stats({});
  EXPECT_EQ(empty.total, 0u);
  for (const auto& [k, v] : empty.by_level) EXPECT_EQ(v, 0u) << k;
  EXPECT_TRUE(empty.to_json().is_object());
}

TEST(Stats, PercentilesAreNearestRank) {
  std::vector<InstructionRecord> rs;
  for (int n = 1; n <= 10; ++n) {
    auto r = rec(Task::tlr, "d" + std::to_string(n), "q", "");
    for (int k = 0; k < n; ++k) r.answer += "w ";
    rs.push_back(r);
  }
  auto ls = dataset_stats(rs).answer_words["tlr"];
  EXPECT_DOUBLE_EQ(ls.mean, 5.5);
  EXPECT_DOUBLE_EQ(ls.p50, 5);
  EXPECT_DOUBLE_EQ(ls.p90, 9);
  EXPECT_EQ(ls.max, 10u);
}

TEST(Stats, TotalsMatchOnRandomCorpora) {
  Rng rng(4);
  const std::vector<Task> tasks{Task::ddd, Task::tlr, Task::dla_locate, Task::tu_shape, Task::mvlm, Task::geometric, Task::cot_qa};
  for (int t = 0; t < 20; ++t) {
    std::vector<InstructionRecord> rs;
    const std::size_t n = rng.below(200);
    for (std::size_t i = 0; i < n; ++i) rs.push_back(rec(rng.pick(tasks), "d", std::to_string(i), "a"));
    auto s = dataset_stats(rs);
    std::size_t lv = 0, tk = 0, src = 0;
    for (auto& [k, v] : s.by_level) lv += v;
    for (auto& [k, v] : s.by_task) tk += v;
    for (auto& [k, v] : s.by_source) src += v;
    EXPECT_EQ(lv, n);
    EXPECT_EQ(tk, n);
    EXPECT_EQ(src, n);
  }
}
