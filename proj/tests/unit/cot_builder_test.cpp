#include <gtest/gtest.h>

#include <deque>
#include <fstream>

#include "layoutinstruct/core.hpp"
#include "layoutinstruct/cot_builder.hpp"
#include "layoutinstruct/json_io.hpp"
#include "support.hpp"

using namespace layoutinstruct;
namespace fs = std::filesystem;

namespace {

class Replies : public TextGenerator {
 public:
  explicit Replies(std::deque<std::string> r) : replies(std::move(r)) {}
  std::string complete(const GenerationRequest& req) override {
    prompts.push_back(req.prompt);
    if (replies.empty()) throw GenerationError(GenerationError::Kind::exhausted, "no more replies");
    auto r = replies.front();
    replies.pop_front();
    return r;
  }
  std::deque<std::string> replies;
  std::vector<std::string> prompts;
};

DocumentRecord image_doc() {
  DocumentRecord d;
  d.doc_id = "img1";
  d.image_ref = "img1.png";
  d.page_w = d.page_h = 1000;
  d.source = "image";
  d.segments = {{"Net income", {10, 10, 20, 20}},
                {"rose", {15, 5, 30, 18}},
                {"Total: $5.00", {100, 300, 200, 320}},
                {"Footer", {0, 900, 50, 950}}};
  d.segments = reading_order_sort(d.segments);
  return d;
}

std::string qa_json(const std::string& q, const std::vector<std::string>& sentences) {
  Json o = Json::object();
  o["question"] = q;
  o["answer"] = "ans " + q;
  o["analysis"] = "analysis of " + q;
  o["relevant_sentences"] = sentences;
  o["explanation"] = "explanation of " + q;
  return o.dump();
}

MRCItem mrc_item() {
  MRCItem m;
  m.item_id = "feta-1";
  m.source = "fetaqa";
  m.table.n_rows = 2;
  m.table.n_cols = 2;
  m.table.cells = {{1, 1, "City", {}}, {1, 2, "Country", {}}, {2, 1, "Paris", {}}, {2, 2, "France", {}}};
  m.question = "Which city?";
  m.answer = "Paris";
  m.highlighted_cells = {{2, 1}};
  return m;
}

}  // namespace

TEST(Represent, ImageDocIsLayoutText) {
  DocumentRecord d;
  d.doc_id = "two";
  d.page_w = d.page_h = 10;
  d.segments = {{"first", {1, 1, 2, 2}}, {"second", {1, 5, 2, 6}}};
  auto rep = represent_document({SourceKind::image, d});
  EXPECT_EQ(rep.kind, DocRepresentation::Kind::layout_text);
  EXPECT_EQ(rep.body, "{text:\"first\", box:[1,1,2,2]}\n{text:\"second\", box:[1,5,2,6]}");
  d.segments.clear();
  EXPECT_THROW(represent_document({SourceKind::image, d}), Error);
}

TEST(Represent, MrcTableOnFixedGrid) {
  auto m = mrc_item();
  auto rep = represent_document({SourceKind::mrc, m});
  EXPECT_EQ(rep.kind, DocRepresentation::Kind::html);
  std::size_t tds = 0;
  for (std::size_t p = 0; (p = rep.body.find("<td>", p)) != std::string::npos; ++p) ++tds;
  EXPECT_EQ(tds, 4u);
  ASSERT_EQ(rep.segments.size(), 4u);
  // 2x2 grid of 200x60 cells is a 400x120 page; each cell is a quarter.
  EXPECT_EQ(rep.segments[0].box, (BBox{0, 0, 500, 500}));
  EXPECT_EQ(rep.segments[1].box, (BBox{500, 0, 1000, 500}));
  EXPECT_EQ(rep.segments[2].box, (BBox{0, 500, 500, 1000}));
  EXPECT_EQ(rep.segments[3].box, (BBox{500, 500, 1000, 1000}));
  m.table.cells.clear();
  EXPECT_THROW(represent_document({SourceKind::mrc, m}), Error);
}

TEST(Represent, HtmlNeedsDerivation) {
  HtmlSource h{"h1", "<p>Hello</p>", std::nullopt};
  EXPECT_THROW(represent_document({SourceKind::html, h}), Error);
  h.derivation = image_doc();
  auto rep = represent_document({SourceKind::html, h});
  EXPECT_EQ(rep.body, "<p>Hello</p>");
  EXPECT_EQ(rep.segments.size(), 4u);
  h.html = "  ";
  EXPECT_THROW(represent_document({SourceKind::html, h}), Error);
}

TEST(ParseQa, KeepsWellFormedObjects) {
  auto two = "Sure:\n[" + qa_json("a", {"x"}) + "," + qa_json("b", {"y"}) + "]\nDone.";
  auto r = parse_qa_cot_response(two);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->pairs.size(), 2u);
  EXPECT_EQ(r->pairs[1].cot.step1_analysis, "analysis of b");

  Json broken = Json::parse(qa_json("c", {"z"}));
  broken.erase("relevant_sentences");
  r = parse_qa_cot_response("[" + qa_json("a", {"x"}) + "," + broken.dump() + "]");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->pairs.size(), 1u);
  EXPECT_EQ(r->dropped_objects, 1u);

  EXPECT_FALSE(parse_qa_cot_response("no list here"));
  EXPECT_FALSE(parse_qa_cot_response("[not json"));
}

TEST(GenerateQa, RepromptsOnceThenSkips) {
  auto rep = represent_document({SourceKind::image, image_doc()});
  Replies good({"garbage", "[" + qa_json("a", {"rose"}) + "]"});
  auto r = generate_qa_cot(rep, good);
  EXPECT_FALSE(r.skipped);
  EXPECT_EQ(r.pairs.size(), 1u);
  ASSERT_EQ(good.prompts.size(), 2u);
  EXPECT_NE(good.prompts[1].find(good.prompts[0]), std::string::npos);

  Replies bad({"garbage", "still garbage"});
  r = generate_qa_cot(rep, bad);
  EXPECT_TRUE(r.skipped);
  EXPECT_TRUE(r.pairs.empty());

  Replies down({});
  r = generate_qa_cot(rep, down);
  EXPECT_TRUE(r.skipped);
}

TEST(ReuseMrc, TableCotFromHighlights) {
  auto m = mrc_item();
  auto qc = reuse_mrc_qa(m);
  EXPECT_EQ(qc.qa.answer, "Paris");
  EXPECT_EQ(qc.cot.relevant_sentences, std::vector<std::string>{"Paris"});
  EXPECT_NE(qc.cot.step1_analysis.find("Table"), std::string::npos);
  m.highlighted_cells = {{2, 1}, {2, 2}};
  qc = reuse_mrc_qa(m);
  EXPECT_EQ(qc.cot.relevant_sentences, (std::vector<std::string>{"Paris", "France"}));
  EXPECT_NE(qc.cot.step1_analysis.find("Table"), std::string::npos);
}

TEST(Matching, ContainmentRules) {
  EXPECT_TRUE(sentence_matches("Total: $5.00", "total: $5.00"));
  EXPECT_TRUE(sentence_matches("Net income rose", "Net income"));
  EXPECT_TRUE(sentence_matches("Net income rose", "rose"));
  EXPECT_TRUE(sentence_matches("income", "Net income"));
  EXPECT_TRUE(sentence_matches("  NET   income. ", "net income"));
  EXPECT_FALSE(sentence_matches("Gross margin", "Net income"));
  EXPECT_FALSE(sentence_matches("...", "Net income"));
  EXPECT_FALSE(sentence_matches("", ""));
}

TEST(Matching, SpanningSentenceCollectsBothSegments) {
  auto doc = image_doc();
  TextCoT tc{"s1", {"Net income rose"}, "s3"};
  auto matched = match_relevant_sentences(tc, doc.segments);
  ASSERT_EQ(matched.size(), 2u);
  auto cot = build_layout_cot(tc, matched);
  EXPECT_EQ(cot.step2_box, (BBox{10, 5, 30, 20}));
  EXPECT_EQ(cot.step1, "s1");
  EXPECT_EQ(cot.step3, "s3");

  tc.relevant_sentences = {"Net income rose", "Zebra quartz"};
  EXPECT_TRUE(match_relevant_sentences(tc, doc.segments).empty());
}

TEST(LayoutCot, SingletonAndEmpty) {
  TextCoT tc{"a", {"x"}, "b"};
  EXPECT_EQ(build_layout_cot(tc, {{"x", {1, 2, 3, 4}}}).step2_box, (BBox{1, 2, 3, 4}));
  EXPECT_THROW(build_layout_cot(tc, {}), Error);
}

TEST(BuildRecords, ImageSourceEndToEnd) {
  auto doc = image_doc();
  Replies client({"[" + qa_json("q1", {"Total: $5.00"}) + "," + qa_json("q2", {"Net income rose"}) +
                  "," + qa_json("q3", {"Zebra quartz nebula"}) + "]"});
  auto out = build_cot_records({SourceKind::image, doc}, client, 5);
  EXPECT_EQ(out.pairs_generated, 3u);
  EXPECT_EQ(out.pairs_discarded, 1u);
  ASSERT_EQ(out.records.size(), 2u);
  const auto& r = out.records[0];
  EXPECT_EQ(r.task, Task::cot_qa);
  EXPECT_EQ(r.level, Level::sft);
  EXPECT_EQ(r.image_ref, "img1.png");
  EXPECT_EQ(r.cot->step2_box, (BBox{100, 300, 200, 320}));
  EXPECT_EQ(r.cot->step1, "analysis of q1");
  EXPECT_EQ(r.cot->step3, "explanation of q1");
  EXPECT_EQ(out.records[1].cot->step2_box, (BBox{10, 5, 30, 20}));
  EXPECT_NE(out.records[0].seed, out.records[1].seed);
}

TEST(BuildRecords, MrcUsesHighlightedCellBoxes) {
  auto m = mrc_item();
  m.highlighted_cells = {{1, 1}, {2, 1}};
  Replies unused({});
  auto out = build_cot_records({SourceKind::mrc, m}, unused, 5);
  ASSERT_EQ(out.records.size(), 1u);
  EXPECT_TRUE(unused.prompts.empty());
  EXPECT_EQ(out.records[0].cot->step2_box, (BBox{0, 0, 500, 1000}));
  EXPECT_EQ(out.records[0].image_ref, "render/feta-1.png");
  EXPECT_EQ(out.records[0].source, "fetaqa");
}

TEST(BuildRecords, ClientErrorSkipsSource) {
  Replies down({});
  auto out = build_cot_records({SourceKind::image, image_doc()}, down, 5);
  EXPECT_TRUE(out.skipped);
  EXPECT_TRUE(out.records.empty());
}

TEST(RenderManifest, PendingDoneFailed) {
  std::vector<CorpusSource> sources;
  for (int i = 0; i < 3; ++i)
    sources.push_back({SourceKind::html, HtmlSource{"h" + std::to_string(i), "<p>x</p>", image_doc()}});
  sources.push_back({SourceKind::image, image_doc()});

  auto dir = lit::scratch_dir("manifest");
  auto pending = emit_render_manifest(sources, dir);
  EXPECT_EQ(pending.pending, 3u);
  auto lines = read_lines(dir / "render_manifest.jsonl");
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], R"({"doc_id":"h0","html_path":"render/h0.html","image_path":"render/h0.png","status":"pending"})");
  EXPECT_EQ(lit::slurp(dir / "render" / "h2.html"), "<p>x</p>");

  auto done_dir = lit::scratch_dir("manifest-done");
  auto done = emit_render_manifest(sources, done_dir, "cp {html} {out}");
  EXPECT_EQ(done.done, 3u);
  EXPECT_TRUE(fs::exists(done_dir / "render" / "h1.png"));

  auto fail_dir = lit::scratch_dir("manifest-fail");
  EXPECT_EQ(emit_render_manifest(sources, fail_dir, "false {html} {out}").failed, 3u);
}

TEST(RenderManifest, WriteFailureIsCountedAlone) {
  std::vector<CorpusSource> sources;
  for (int i = 0; i < 3; ++i)
    sources.push_back({SourceKind::html, HtmlSource{"h" + std::to_string(i), "<p>x</p>", image_doc()}});
  auto dir = lit::scratch_dir("manifest-wf");
  fs::create_directories(dir / "render" / "h1.html");  // a directory where the file should go
  auto s = emit_render_manifest(sources, dir);
  EXPECT_EQ(s.write_failed, 1u);
  EXPECT_EQ(s.pending, 2u);
  EXPECT_EQ(s.entries[1].status, "write_failed");
}

TEST(HtmlSources, SidecarsAndMissingOnes) {
  auto dir = lit::scratch_dir("html");
  std::ofstream(dir / "a.html") << "<p>A</p>";
  std::ofstream(dir / "a.json") << R"({"page_w":100,"page_h":100,"segments":[{"text":"A","box":[1,1,5,5]}]})";
  std::ofstream(dir / "b.html") << "<p>B</p>";
  auto res = load_html_sources(dir);
  ASSERT_EQ(res.items.size(), 2u);
  EXPECT_TRUE(std::get<HtmlSource>(res.items[0].payload).derivation);
  EXPECT_FALSE(std::get<HtmlSource>(res.items[1].payload).derivation);
  EXPECT_EQ(res.report.warnings, 1u);
}
