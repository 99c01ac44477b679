#include "layoutinstruct/json_io.hpp"

#include <fstream>
#include <sstream>

namespace layoutinstruct {

void to_json(Json& j, const BBox& b) { j = Json::array({b.x1, b.y1, b.x2, b.y2}); }

void from_json(const Json& j, BBox& b) {
  if (!j.is_array() || j.size() != 4) throw Error("json", "", "box must be a 4-element array");
  b = BBox{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

void to_json(Json& j, const TextSegment& s) {
  j = Json::object();
  j["text"] = s.text;
  j["box"] = s.box;
  j["masked_text"] = s.masked_text;
  j["zeroed_box"] = s.zeroed_box;
}

void from_json(const Json& j, TextSegment& s) {
  s.text = j.at("text").get<std::string>();
  s.box = j.at("box").get<BBox>();
  s.masked_text = j.value("masked_text", false);
  s.zeroed_box = j.value("zeroed_box", false);
}

void to_json(Json& j, const LayoutRegion& r) {
  j = Json::object();
  j["kind"] = r.kind;
  j["box"] = r.box;
}

void from_json(const Json& j, LayoutRegion& r) {
  r.kind = j.at("kind").get<std::string>();
  r.box = j.at("box").get<BBox>();
}

void to_json(Json& j, const TableAnnotation& t) {
  j = Json::object();
  j["n_rows"] = t.n_rows;
  j["n_cols"] = t.n_cols;
  Json cells = Json::array();
  for (const auto& c : t.cells) {
    Json cj = Json::object();
    cj["row"] = c.row;
    cj["col"] = c.col;
    cj["text"] = c.text;
    cj["box"] = c.box ? Json(*c.box) : Json(nullptr);
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);
}

void from_json(const Json& j, TableAnnotation& t) {
  t.n_rows = j.at("n_rows").get<int>();
  t.n_cols = j.at("n_cols").get<int>();
  t.cells.clear();
  for (const auto& cj : j.at("cells")) {
    TableCell c;
    c.row = cj.at("row").get<int>();
    c.col = cj.at("col").get<int>();
    c.text = cj.value("text", std::string{});
    if (cj.contains("box") && !cj["box"].is_null()) c.box = cj["box"].get<BBox>();
    t.cells.push_back(std::move(c));
  }
}

namespace {

Json entity_json(const VieEntity& e) {
  Json j = Json::object();
  j["entity_id"] = e.entity_id;
  j["label"] = e.label;
  j["text"] = e.text;
  j["box"] = e.box;
  return j;
}

VieEntity entity_from(const Json& j) {
  VieEntity e;
  e.entity_id = j.at("entity_id").get<int>();
  e.label = j.value("label", std::string{});
  e.text = j.at("text").get<std::string>();
  e.box = j.at("box").get<BBox>();
  return e;
}

}  // namespace

void to_json(Json& j, const VIEAnnotation& v) {
  j = Json::object();
  j["variant"] = v.variant == VieVariant::linking ? "linking" : "entity";
  Json ents = Json::array();
  for (const auto& e : v.form_entities) ents.push_back(entity_json(e));
  j["form_entities"] = std::move(ents);
  Json links = Json::array();
  for (const auto& l : v.links) {
    Json lj = Json::object();
    lj["key"] = entity_json(l.key);
    lj["value_entity_ids"] = l.value_entity_ids;
    links.push_back(std::move(lj));
  }
  j["links"] = std::move(links);
  Json typed = Json::array();
  for (const auto& e : v.entities) {
    Json ej = Json::object();
    ej["etype"] = e.etype;
    ej["text"] = e.text;
    typed.push_back(std::move(ej));
  }
  j["entities"] = std::move(typed);
}

void from_json(const Json& j, VIEAnnotation& v) {
  v = VIEAnnotation{};
  v.variant = j.at("variant").get<std::string>() == "linking" ? VieVariant::linking
                                                              : VieVariant::entity;
  for (const auto& e : j.value("form_entities", Json::array()))
    v.form_entities.push_back(entity_from(e));
  for (const auto& l : j.value("links", Json::array()))
    v.links.push_back(VieLink{entity_from(l.at("key")),
                              l.at("value_entity_ids").get<std::vector<int>>()});
  for (const auto& e : j.value("entities", Json::array()))
    v.entities.push_back(
        VieTypedEntity{e.at("etype").get<std::string>(), e.at("text").get<std::string>()});
}

void to_json(Json& j, const DocumentRecord& d) {
  j = Json::object();
  j["doc_id"] = d.doc_id;
  j["image_ref"] = d.image_ref ? Json(*d.image_ref) : Json(nullptr);
  j["page_w"] = d.page_w;
  j["page_h"] = d.page_h;
  j["segments"] = d.segments;
  j["regions"] = d.regions;
  j["table"] = d.table ? Json(*d.table) : Json(nullptr);
  j["vie"] = d.vie ? Json(*d.vie) : Json(nullptr);
  j["source"] = d.source;
}

void from_json(const Json& j, DocumentRecord& d) {
  d = DocumentRecord{};
  d.doc_id = j.at("doc_id").get<std::string>();
  if (j.contains("image_ref") && !j["image_ref"].is_null())
    d.image_ref = j["image_ref"].get<std::string>();
  d.page_w = j.at("page_w").get<int>();
  d.page_h = j.at("page_h").get<int>();
  d.segments = j.value("segments", Json::array()).get<std::vector<TextSegment>>();
  d.regions = j.value("regions", Json::array()).get<std::vector<LayoutRegion>>();
  if (j.contains("table") && !j["table"].is_null()) d.table = j["table"].get<TableAnnotation>();
  if (j.contains("vie") && !j["vie"].is_null()) d.vie = j["vie"].get<VIEAnnotation>();
  d.source = j.value("source", std::string{});
}

void to_json(Json& j, const MRCItem& m) {
  j = Json::object();
  j["item_id"] = m.item_id;
  j["table"] = m.table;
  j["question"] = m.question;
  j["answer"] = m.answer;
  Json cells = Json::array();
  for (auto [r, c] : m.highlighted_cells) cells.push_back(Json::array({r, c}));
  j["highlighted_cells"] = std::move(cells);
  j["source"] = m.source;
}

void from_json(const Json& j, MRCItem& m) {
  m = MRCItem{};
  m.item_id = j.at("item_id").get<std::string>();
  m.table = j.at("table").get<TableAnnotation>();
  m.question = j.at("question").get<std::string>();
  m.answer = j.at("answer").get<std::string>();
  for (const auto& c : j.at("highlighted_cells"))
    m.highlighted_cells.emplace_back(c.at(0).get<int>(), c.at(1).get<int>());
  m.source = j.value("source", std::string{});
}

void to_json(Json& j, const LayoutCoTRecord& c) {
  j = Json::object();
  j["step1"] = c.step1;
  j["step2_box"] = c.step2_box;
  j["step3"] = c.step3;
}

void from_json(const Json& j, LayoutCoTRecord& c) {
  c.step1 = j.at("step1").get<std::string>();
  c.step2_box = j.at("step2_box").get<BBox>();
  c.step3 = j.at("step3").get<std::string>();
}

void to_json(Json& j, const InstructionRecord& r) {
  j = Json::object();
  j["id"] = r.id;
  j["task"] = to_string(r.task);
  j["level"] = to_string(r.level);
  j["doc_id"] = r.doc_id;
  j["image_ref"] = r.image_ref ? Json(*r.image_ref) : Json(nullptr);
  j["input_segments"] = r.input_segments;
  j["question"] = r.question;
  j["answer"] = r.answer;
  j["cot"] = r.cot ? Json(*r.cot) : Json(nullptr);
  j["seed"] = r.seed;
  j["source"] = r.source;
}

void from_json(const Json& j, InstructionRecord& r) {
  r = InstructionRecord{};
  r.id = j.at("id").get<std::string>();
  r.task = task_from_string(j.at("task").get<std::string>());
  r.level = level_from_string(j.at("level").get<std::string>());
  r.doc_id = j.at("doc_id").get<std::string>();
  if (!j.at("image_ref").is_null()) r.image_ref = j["image_ref"].get<std::string>();
  r.input_segments = j.at("input_segments").get<std::vector<TextSegment>>();
  r.question = j.at("question").get<std::string>();
  r.answer = j.at("answer").get<std::string>();
  if (!j.at("cot").is_null()) r.cot = j["cot"].get<LayoutCoTRecord>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.source = j.at("source").get<std::string>();
}

std::string dump_line(const Json& j) {
  return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", path.string(), "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", path.string(), "cannot open file");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (out) out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error("io", path.string(), "write failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error("io", path.string(), "rename failed");
  }
}

}  // namespace layoutinstruct
