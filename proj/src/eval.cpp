#include "layoutinstruct/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "layoutinstruct/core.hpp"
#include "layoutinstruct/parallel.hpp"
#include "layoutinstruct/text.hpp"

namespace layoutinstruct {

std::string_view to_string(Metric m) { return m == Metric::anls ? "anls" : "rouge_l"; }

Metric metric_from_string(std::string_view s) {
  if (s == "anls") return Metric::anls;
  if (s == "rouge_l") return Metric::rouge_l;
  throw Error("eval", std::string(s), "unknown metric");
}

std::optional<Metric> metric_for_dataset(std::string_view dataset) {
  std::string d = text::casefold(dataset);
  if (d == "funsd" || d == "cord" || d == "sroie" || d == "docvqa") return Metric::anls;
  if (d == "visualmrc") return Metric::rouge_l;
  return std::nullopt;
}

void to_json(Json& j, const EvalItem& item) {
  j = Json::object();
  j["item_id"] = item.item_id;
  j["dataset"] = item.dataset;
  j["metric"] = to_string(item.metric);
  j["question"] = item.question;
  j["golds"] = item.golds;
  j["region_hint"] = item.region_hint ? Json(*item.region_hint) : Json(nullptr);
  j["doc"] = item.doc;
}

void from_json(const Json& j, EvalItem& item) {
  item.item_id = j.at("item_id").get<std::string>();
  item.dataset = j.value("dataset", std::string());
  item.metric = metric_from_string(j.at("metric").get<std::string>());
  item.question = j.at("question").get<std::string>();
  item.golds = j.at("golds").get<std::vector<std::string>>();
  if (item.golds.empty()) throw Error("eval", item.item_id, "item has no gold answers");
  auto hint = j.find("region_hint");
  item.region_hint = hint != j.end() && !hint->is_null() ? std::optional(hint->get<BBox>()) : std::nullopt;
  item.doc = j.at("doc").get<DocumentRecord>();
}

void write_eval_set(const std::vector<EvalItem>& items, const std::filesystem::path& path) {
  std::string out;
  for (const auto& item : items) out += dump_line(Json(item)) + "\n";
  write_file_atomic(path, out);
}

std::vector<EvalItem> read_eval_set(const std::filesystem::path& path) {
  std::vector<EvalItem> out;
  for (const auto& line : read_lines(path)) out.push_back(Json::parse(line).get<EvalItem>());
  return out;
}

std::string linking_question(std::string_view key_text) {
  return "What is the \"" + std::string(key_text) + "\" in the document?";
}

std::string entity_question(std::string_view entity_type) {
  std::string t = text::replace_all(text::casefold(entity_type), "_", " ");
  return "What is the " + t + " in the document?";
}

namespace {

EvalItem base_item(const DocumentRecord& doc, std::string item_id) {
  EvalItem item;
  item.item_id = std::move(item_id);
  item.dataset = doc.source;
  item.metric = metric_for_dataset(doc.source).value_or(Metric::anls);
  item.doc = doc;
  item.doc.vie.reset();  // the annotation would leak the answers
  return item;
}

}  // namespace

EvalBuild build_qa_for_vie_linking(const std::vector<DocumentRecord>& docs) {
  EvalBuild out;
  for (const auto& doc : docs) {
    if (!doc.vie || doc.vie->variant != VieVariant::linking) continue;
    for (const auto& link : doc.vie->links) {
      if (link.value_entity_ids.size() > 1) {
        ++out.dropped_multi;
        continue;
      }
      const VieEntity* value =
          link.value_entity_ids.empty() ? nullptr : doc.vie->entity(link.value_entity_ids.front());
      if (!value || text::trim(value->text).empty() || text::trim(link.key.text).empty()) {
        ++out.dropped_other;
        continue;
      }
      auto item = base_item(doc, doc.doc_id + "/link/" + std::to_string(link.key.entity_id));
      item.question = linking_question(link.key.text);
      item.golds = {value->text};
      out.items.push_back(std::move(item));
    }
    // Keys without any link never reach the list above.
    for (const auto& e : doc.vie->form_entities) {
      if (e.label != "question") continue;
      bool linked = std::any_of(doc.vie->links.begin(), doc.vie->links.end(),
                                [&](const VieLink& l) { return l.key.entity_id == e.entity_id; });
      if (!linked) ++out.dropped_other;
    }
  }
  return out;
}

EvalBuild build_qa_for_vie_entities(const std::vector<DocumentRecord>& docs) {
  EvalBuild out;
  for (const auto& doc : docs) {
    if (!doc.vie || doc.vie->variant != VieVariant::entity) continue;
    std::map<std::string, int> counts;
    for (const auto& e : doc.vie->entities) ++counts[e.etype];
    std::map<std::string, bool> counted;
    for (const auto& e : doc.vie->entities) {
      if (counts[e.etype] != 1) {
        if (!counted[e.etype]) ++out.dropped_multi, counted[e.etype] = true;
        continue;
      }
      if (text::trim(e.text).empty()) {
        ++out.dropped_other;
        continue;
      }
      auto item = base_item(doc, doc.doc_id + "/entity/" + e.etype);
      item.question = entity_question(e.etype);
      item.golds = {e.text};
      out.items.push_back(std::move(item));
    }
  }
  return out;
}

double normalized_levenshtein(std::string_view a, std::string_view b) {
  const std::u32string x = text::utf8_decode(text::casefold(text::trim(a)));
  const std::u32string y = text::utf8_decode(text::casefold(text::trim(b)));
  if (x.empty() && y.empty()) return 0.0;
  std::vector<std::size_t> prev(y.size() + 1), cur(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      std::size_t sub = prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(prev[y.size()]) / static_cast<double>(std::max(x.size(), y.size()));
}

double anls(std::string_view prediction, const std::vector<std::string>& golds, double tau) {
  if (golds.empty()) throw Error("eval", "", "ANLS needs at least one gold answer");
  double best = 0.0;
  for (const auto& g : golds) {
    double nl = normalized_levenshtein(prediction, g);
    best = std::max(best, nl < tau ? 1.0 - nl : 0.0);
  }
  return best;
}

namespace {

std::vector<std::string> rouge_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& tok : text::split_whitespace(text::casefold(s))) {
    std::string t = text::strip_edge_punctuation(tok);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

double rouge_l(std::string_view prediction, std::string_view gold) {
  const auto p = rouge_tokens(prediction);
  const auto g = rouge_tokens(gold);
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;
  std::vector<std::size_t> prev(g.size() + 1, 0), cur(g.size() + 1, 0);
  for (std::size_t i = 1; i <= p.size(); ++i) {
    for (std::size_t j = 1; j <= g.size(); ++j)
      cur[j] = p[i - 1] == g[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  const auto lcs = static_cast<double>(prev[g.size()]);
  if (lcs == 0) return 0.0;
  const double precision = lcs / static_cast<double>(p.size());
  const double recall = lcs / static_cast<double>(g.size());
  return 2 * precision * recall / (precision + recall);
}

double score_item(Metric metric, std::string_view prediction, const std::vector<std::string>& golds) {
  if (golds.empty()) throw Error("eval", "", "item has no gold answers");
  if (metric == Metric::anls) return anls(prediction, golds);
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, rouge_l(prediction, g));
  return best;
}

PromptMode prompt_mode_from_string(std::string_view s) {
  if (s == "plain") return PromptMode::plain;
  if (s == "layout_text") return PromptMode::layout_text;
  throw Error("eval", std::string(s), "unknown prompt mode");
}

std::string format_prompt(const EvalItem& item, PromptMode mode) {
  auto segments = reading_order_sort(item.doc.segments);
  std::string body;
  if (mode == PromptMode::plain) {
    std::vector<std::string> texts;
    texts.reserve(segments.size());
    for (const auto& s : segments) texts.push_back(s.text);
    body = text::join(texts, " ");
  } else {
    body = render_layout_text(segments);
  }
  return body + "\n" + item.question;
}

Adapter gold_echo_adapter() {
  return [](const EvalItem& item) -> std::optional<std::string> { return item.golds.front(); };
}

Adapter prediction_map_adapter(std::map<std::string, std::string> predictions) {
  return [preds = std::move(predictions)](const EvalItem& item) -> std::optional<std::string> {
    auto it = preds.find(item.item_id);
    if (it == preds.end()) return std::nullopt;
    return it->second;
  };
}

std::map<std::string, std::string> read_predictions(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  for (const auto& line : read_lines(path)) {
    auto j = Json::parse(line);
    out[j.at("item_id").get<std::string>()] = j.at("prediction").get<std::string>();
  }
  return out;
}

Adapter endpoint_adapter(TextGenerator& client, PromptMode mode) {
  return [&client, mode](const EvalItem& item) -> std::optional<std::string> {
    GenerationRequest req;
    req.prompt = format_prompt(item, mode);
    req.tag = GenerationTag::qa_cot;
    return client.complete(req);
  };
}

Json ScoreReport::summary_json() const {
  Json j = Json::object();
  j["dataset"] = dataset;
  j["metric"] = to_string(metric);
  j["n_items"] = n_items;
  j["mean_score"] = mean_score;
  j["n_flagged"] = n_flagged;
  j["beam_note"] = beam_note;
  return j;
}

std::string ScoreReport::table() const {
  char line[256];
  std::string out;
  std::snprintf(line, sizeof line, "%-16s %-8s %8s %8s %10s\n", "dataset", "metric", "items",
                "flagged", "score");
  out += line;
  std::snprintf(line, sizeof line, "%-16s %-8s %8zu %8zu %10.4f\n", dataset.c_str(),
                std::string(to_string(metric)).c_str(), n_items, n_flagged, mean_score);
  out += line;
  if (!beam_note.empty()) out += "decoding: " + beam_note + "\n";
  return out;
}

ScoreReport score_run(const std::vector<EvalItem>& items, const Adapter& adapter,
                      std::string beam_note, std::size_t workers) {
  ScoreReport report;
  report.beam_note = std::move(beam_note);
  if (items.empty()) return report;
  report.dataset = items.front().dataset;
  report.metric = items.front().metric;
  for (const auto& item : items) {
    if (item.dataset != report.dataset)
      throw Error("eval", item.item_id, "mixed datasets in one run: " + report.dataset + ", " + item.dataset);
    if (item.metric != report.metric)
      throw Error("eval", item.item_id, "mixed metrics in one run");
    auto expected = metric_for_dataset(item.dataset);
    if (expected && *expected != item.metric)
      throw Error("eval", item.item_id,
                  "metric " + std::string(to_string(item.metric)) + " does not match dataset " +
                      item.dataset + " (expects " + std::string(to_string(*expected)) + ")");
    if (item.golds.empty()) throw Error("eval", item.item_id, "item has no gold answers");
  }

  report.per_item.resize(items.size());
  parallel_for(items.size(), workers, [&](std::size_t i) {
    const auto& item = items[i];
    ItemScore& s = report.per_item[i];
    s.item_id = item.item_id;
    try {
      auto pred = adapter(item);
      if (!pred) {
        s.flagged = true;
        s.note = "no prediction";
        return;
      }
      s.prediction = *pred;
      s.score = score_item(item.metric, s.prediction, item.golds);
    } catch (const std::exception& e) {
      s.flagged = true;
      s.score = 0;
      s.note = e.what();
    }
  });

  std::stable_sort(report.per_item.begin(), report.per_item.end(),
                   [](const ItemScore& a, const ItemScore& b) { return a.item_id < b.item_id; });
  double sum = 0;
  for (const auto& s : report.per_item) {
    sum += s.score;
    report.n_flagged += s.flagged ? 1 : 0;
  }
  report.n_items = report.per_item.size();
  report.mean_score = sum / static_cast<double>(report.n_items);
  return report;
}

void write_score_report(const ScoreReport& report, const std::filesystem::path& stem) {
  std::string jsonl = dump_line(Json{{"summary", report.summary_json()}}) + "\n";
  for (const auto& s : report.per_item) {
    Json j = Json::object();
    j["item_id"] = s.item_id;
    j["prediction"] = s.prediction;
    j["score"] = s.score;
    j["flagged"] = s.flagged;
    if (!s.note.empty()) j["note"] = s.note;
    jsonl += dump_line(j) + "\n";
  }
  auto base = stem.string();
  write_file_atomic(base + ".jsonl", jsonl);
  write_file_atomic(base + ".txt", report.table());
}

}  // namespace layoutinstruct
