#include "layoutinstruct/ingest.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <map>
#include <regex>
#include <set>

#include "layoutinstruct/core.hpp"
#include "layoutinstruct/json_io.hpp"
#include "layoutinstruct/text.hpp"

namespace fs = std::filesystem;

namespace layoutinstruct {

void LoadReport::skip(std::string why) {
  ++records_skipped;
  spdlog::warn("skipped: {}", why);
  messages.push_back(std::move(why));
}

void LoadReport::warn(std::string why) {
  ++warnings;
  spdlog::debug("warning: {}", why);
  messages.push_back(std::move(why));
}

std::vector<fs::path> sorted_files(const fs::path& dir, std::string_view ext) {
  if (!fs::is_directory(dir)) throw Error("ingest", dir.string(), "input directory not found");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ext) files.push_back(entry.path());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return files;
}

namespace {

PixelBox pixel_box(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw Error("ingest", "", "box must have 4 numbers");
  return PixelBox{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                  j[3].get<double>()};
}

Json parse_json(const std::string& body, const std::string& context) {
  try {
    return Json::parse(body);
  } catch (const Json::exception& e) {
    throw Error("ingest", context, std::string("malformed JSON: ") + e.what());
  }
}

std::vector<TextSegment> parse_segments(const Json& arr, int page_w, int page_h,
                                        const std::string& doc_id, LoadReport* report) {
  std::vector<TextSegment> segs;
  for (const auto& sj : arr) {
    TextSegment seg;
    seg.text = sj.at("text").get<std::string>();
    seg.box = normalize_bbox(pixel_box(sj.at("box")), page_w, page_h, doc_id);
    if (text::trim(seg.text).empty()) {
      if (report) report->warn(doc_id + ": dropped segment with empty text");
      continue;
    }
    segs.push_back(std::move(seg));
  }
  return reading_order_sort(std::move(segs));
}

std::string strip_tags(const std::string& s) {
  std::string out;
  bool in_tag = false;
  for (char c : s) {
    if (c == '<') in_tag = true;
    else if (c == '>' && in_tag) in_tag = false;
    else if (!in_tag) out += c;
  }
  return out;
}

int span_value(const std::string& token, const char* attr) {
  std::regex re(std::string(attr) + "\\s*=\\s*\"?(\\d+)");
  std::smatch m;
  if (std::regex_search(token, m, re)) return std::stoi(m[1].str());
  return 1;
}

}  // namespace

DocumentRecord load_ocr_page(const fs::path& file, std::string_view source) {
  const std::string ctx = file.filename().string();
  Json j = parse_json(read_file(file), ctx);
  try {
    DocumentRecord doc;
    doc.doc_id = file.stem().string();
    doc.page_w = j.at("page_w").get<int>();
    doc.page_h = j.at("page_h").get<int>();
    if (doc.page_w <= 0 || doc.page_h <= 0) throw Error("ingest", ctx, "non-positive page size");
    if (j.contains("image_ref") && j["image_ref"].is_string())
      doc.image_ref = j["image_ref"].get<std::string>();
    doc.segments = parse_segments(j.value("segments", Json::array()), doc.page_w, doc.page_h,
                                  doc.doc_id, nullptr);
    doc.source = std::string(source);
    return doc;
  } catch (const Json::exception& e) {
    throw Error("ingest", ctx, std::string("schema error: ") + e.what());
  }
}

LoadResult<DocumentRecord> load_ocr_corpus(const fs::path& dir, std::string_view source) {
  LoadResult<DocumentRecord> result;
  for (const auto& file : sorted_files(dir, ".json")) {
    ++result.report.records_in;
    try {
      auto doc = load_ocr_page(file, source);
      if (auto bad = validate_document(doc); !bad.empty())
        throw Error("ingest", doc.doc_id, bad);
      if (!doc.usable_for_text()) result.report.warn(doc.doc_id + ": no segments, unusable for text tasks");
      result.items.push_back(std::move(doc));
      ++result.report.records_out;
    } catch (const std::exception& e) {
      result.report.skip(e.what());
    }
  }
  return result;
}

LoadResult<DocumentRecord> load_layout_corpus(const fs::path& file, std::string_view source) {
  LoadResult<DocumentRecord> result;
  const std::string ctx = file.filename().string();
  Json j = parse_json(read_file(file), ctx);

  std::map<long, std::string> categories;
  for (const auto& c : j.value("categories", Json::array()))
    categories[c.at("id").get<long>()] = text::casefold(c.at("name").get<std::string>());

  std::map<long, std::size_t> images;
  std::vector<DocumentRecord> docs;
  for (const auto& im : j.value("images", Json::array())) {
    ++result.report.records_in;
    try {
      DocumentRecord doc;
      std::string name = im.at("file_name").get<std::string>();
      doc.doc_id = fs::path(name).stem().string();
      doc.image_ref = name;
      doc.page_w = im.at("width").get<int>();
      doc.page_h = im.at("height").get<int>();
      if (doc.page_w <= 0 || doc.page_h <= 0) throw Error("ingest", doc.doc_id, "non-positive page size");
      doc.source = std::string(source);
      images[im.at("id").get<long>()] = docs.size();
      docs.push_back(std::move(doc));
    } catch (const std::exception& e) {
      result.report.skip(ctx + ": image entry: " + e.what());
    }
  }

  std::vector<std::set<LayoutRegion>> seen(docs.size());
  for (const auto& a : j.value("annotations", Json::array())) {
    long image_id = a.at("image_id").get<long>();
    auto im = images.find(image_id);
    if (im == images.end()) {
      result.report.warn(ctx + ": annotation for unknown image " + std::to_string(image_id));
      continue;
    }
    auto& doc = docs[im->second];
    auto cat = categories.find(a.at("category_id").get<long>());
    if (cat == categories.end()) {
      result.report.warn(doc.doc_id + ": unknown category id");
      continue;
    }
    const auto& bb = a.at("bbox");
    PixelBox raw{bb.at(0).get<double>(), bb.at(1).get<double>(),
                 bb.at(0).get<double>() + bb.at(2).get<double>(),
                 bb.at(1).get<double>() + bb.at(3).get<double>()};
    try {
      LayoutRegion region{cat->second, normalize_bbox(raw, doc.page_w, doc.page_h, doc.doc_id)};
      if (seen[im->second].insert(region).second) doc.regions.push_back(std::move(region));
    } catch (const Error& e) {
      result.report.warn(e.what());
    }
  }

  for (auto& doc : docs) {
    result.items.push_back(std::move(doc));
    ++result.report.records_out;
  }
  std::sort(result.items.begin(), result.items.end(),
            [](const DocumentRecord& a, const DocumentRecord& b) { return a.doc_id < b.doc_id; });
  return result;
}

TableAnnotation table_from_structure(const std::vector<std::string>& tokens,
                                     const std::vector<std::string>& cell_texts) {
  TableAnnotation table;
  std::vector<std::vector<bool>> occupied;
  auto occupy = [&](int r, int c) {
    if (static_cast<int>(occupied.size()) <= r) occupied.resize(r + 1);
    auto& row = occupied[r];
    if (static_cast<int>(row.size()) <= c) row.resize(c + 1, false);
    row[c] = true;
  };
  auto is_occupied = [&](int r, int c) {
    return r < static_cast<int>(occupied.size()) && c < static_cast<int>(occupied[r].size()) &&
           occupied[r][c];
  };

  int row = -1;
  int col = 0;
  std::size_t cell_index = 0;
  int max_row_extent = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& tok = tokens[i];
    if (tok == "<tr>") {
      ++row;
      col = 0;
    } else if (tok == "<td>" || tok == "<td") {
      if (row < 0) throw Error("ingest", "", "cell outside any row");
      int rowspan = 1, colspan = 1;
      if (tok == "<td") {
        for (++i; i < tokens.size() && tokens[i] != ">"; ++i) {
          if (tokens[i].find("rowspan") != std::string::npos) rowspan = span_value(tokens[i], "rowspan");
          if (tokens[i].find("colspan") != std::string::npos) colspan = span_value(tokens[i], "colspan");
        }
        if (i == tokens.size()) throw Error("ingest", "", "unterminated <td");
      }
      if (rowspan < 1 || colspan < 1) throw Error("ingest", "", "non-positive span");
      while (is_occupied(row, col)) ++col;
      if (cell_index >= cell_texts.size())
        throw Error("ingest", "", "structure has more cells than the cell list");
      table.cells.push_back(TableCell{row + 1, col + 1, cell_texts[cell_index++], std::nullopt});
      for (int dr = 0; dr < rowspan; ++dr)
        for (int dc = 0; dc < colspan; ++dc) occupy(row + dr, col + dc);
      max_row_extent = std::max(max_row_extent, row + rowspan);
      col += colspan;
    }
  }
  if (table.cells.empty()) throw Error("ingest", "", "empty table");
  if (cell_index != cell_texts.size())
    throw Error("ingest", "", "cell list longer than the structure");
  table.n_rows = row + 1;
  if (max_row_extent > table.n_rows)
    throw Error("ingest", "", "cell spans outside the declared grid");
  for (const auto& r : occupied) table.n_cols = std::max(table.n_cols, static_cast<int>(r.size()));
  return table;
}

LoadResult<DocumentRecord> load_table_corpus(const fs::path& file, std::string_view source) {
  LoadResult<DocumentRecord> result;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(file)) {
    ++line_no;
    ++result.report.records_in;
    const std::string ctx = file.filename().string() + ":" + std::to_string(line_no);
    try {
      Json j = parse_json(line, ctx);
      DocumentRecord doc;
      std::string name = j.at("filename").get<std::string>();
      doc.doc_id = fs::path(name).stem().string();
      doc.image_ref = name;
      doc.page_w = j.at("width").get<int>();
      doc.page_h = j.at("height").get<int>();
      doc.source = std::string(source);
      const Json& html = j.at("html");
      auto structure = html.at("structure").at("tokens").get<std::vector<std::string>>();
      std::vector<std::string> texts;
      std::vector<std::optional<PixelBox>> boxes;
      for (const auto& c : html.at("cells")) {
        std::string t;
        for (const auto& tok : c.value("tokens", Json::array())) t += tok.get<std::string>();
        texts.push_back(text::trim(strip_tags(t)));
        boxes.push_back(c.contains("bbox") ? std::optional(pixel_box(c["bbox"])) : std::nullopt);
      }
      TableAnnotation table = table_from_structure(structure, texts);
      for (std::size_t k = 0; k < table.cells.size(); ++k) {
        if (!boxes[k]) continue;
        table.cells[k].box = normalize_bbox(*boxes[k], doc.page_w, doc.page_h, doc.doc_id);
        if (!table.cells[k].text.empty())
          doc.segments.push_back(TextSegment{table.cells[k].text, *table.cells[k].box});
      }
      doc.segments = reading_order_sort(std::move(doc.segments));
      doc.regions.push_back(LayoutRegion{
          "table", union_bbox([&] {
            std::vector<BBox> bs;
            for (const auto& c : table.cells)
              if (c.box) bs.push_back(*c.box);
            if (bs.empty()) bs.push_back(BBox{0, 0, kCoordScale, kCoordScale});
            return bs;
          }())});
      doc.table = std::move(table);
      if (auto bad = validate_document(doc); !bad.empty()) throw Error("ingest", doc.doc_id, bad);
      result.items.push_back(std::move(doc));
      ++result.report.records_out;
    } catch (const std::exception& e) {
      result.report.skip(ctx + ": " + e.what());
    }
  }
  return result;
}

namespace {

DocumentRecord load_linking_page(const fs::path& file, std::string_view source,
                                 LoadReport& report) {
  const std::string ctx = file.filename().string();
  Json j = parse_json(read_file(file), ctx);
  DocumentRecord doc;
  doc.doc_id = file.stem().string();
  doc.page_w = j.at("page_w").get<int>();
  doc.page_h = j.at("page_h").get<int>();
  doc.source = std::string(source);
  if (j.contains("image_ref") && j["image_ref"].is_string())
    doc.image_ref = j["image_ref"].get<std::string>();

  VIEAnnotation vie;
  vie.variant = VieVariant::linking;
  std::set<std::pair<int, int>> pairs;
  std::vector<std::pair<int, int>> ordered_pairs;
  std::set<int> ids;
  for (const auto& e : j.at("form")) {
    VieEntity ent;
    ent.entity_id = e.at("id").get<int>();
    ent.label = text::casefold(e.value("label", std::string{}));
    ent.text = text::trim(e.at("text").get<std::string>());
    ent.box = normalize_bbox(pixel_box(e.at("box")), doc.page_w, doc.page_h, doc.doc_id);
    for (const auto& l : e.value("linking", Json::array())) {
      std::pair<int, int> p{l.at(0).get<int>(), l.at(1).get<int>()};
      if (pairs.insert(p).second) ordered_pairs.push_back(p);
    }
    if (ent.text.empty()) {
      report.warn(doc.doc_id + ": dropped entity " + std::to_string(ent.entity_id) + " with empty text");
      continue;
    }
    if (!ids.insert(ent.entity_id).second)
      throw Error("ingest", doc.doc_id, "duplicate entity id " + std::to_string(ent.entity_id));
    doc.segments.push_back(TextSegment{ent.text, ent.box});
    vie.form_entities.push_back(std::move(ent));
  }

  std::map<int, std::vector<int>> values_by_key;
  std::vector<int> key_order;
  for (auto [from, to] : ordered_pairs) {
    const VieEntity* a = vie.entity(from);
    const VieEntity* b = vie.entity(to);
    if (!a || !b) {
      report.warn(doc.doc_id + ": dangling link " + std::to_string(from) + "->" + std::to_string(to));
      continue;
    }
    // Links run from a key ("question") to its value; other pairs are structure.
    if (a->label != "question") continue;
    if (!values_by_key.count(from)) key_order.push_back(from);
    values_by_key[from].push_back(to);
  }
  for (int key : key_order)
    vie.links.push_back(VieLink{*vie.entity(key), values_by_key[key]});

  doc.segments = reading_order_sort(std::move(doc.segments));
  doc.vie = std::move(vie);
  return doc;
}

DocumentRecord load_entity_page(const fs::path& file, std::string_view source,
                                LoadReport& report) {
  const std::string ctx = file.filename().string();
  Json j = parse_json(read_file(file), ctx);
  DocumentRecord doc;
  doc.doc_id = file.stem().string();
  doc.page_w = j.at("page_w").get<int>();
  doc.page_h = j.at("page_h").get<int>();
  doc.source = std::string(source);
  if (j.contains("image_ref") && j["image_ref"].is_string())
    doc.image_ref = j["image_ref"].get<std::string>();
  doc.segments = parse_segments(j.value("segments", Json::array()), doc.page_w, doc.page_h,
                                doc.doc_id, &report);
  VIEAnnotation vie;
  vie.variant = VieVariant::entity;
  auto add = [&](std::string type, std::string value) {
    value = text::trim(value);
    if (value.empty()) {
      report.warn(doc.doc_id + ": dropped entity '" + type + "' with empty text");
      return;
    }
    vie.entities.push_back(VieTypedEntity{std::move(type), std::move(value)});
  };
  const Json& ents = j.at("entities");
  if (ents.is_object()) {
    for (const auto& [k, v] : ents.items()) add(k, v.get<std::string>());
  } else {
    for (const auto& e : ents)
      add(e.contains("type") ? e["type"].get<std::string>() : e.at("etype").get<std::string>(),
          e.at("text").get<std::string>());
  }
  doc.vie = std::move(vie);
  return doc;
}

}  // namespace

LoadResult<DocumentRecord> load_vie_corpus(const fs::path& dir, VieVariant variant,
                                           std::string_view source) {
  LoadResult<DocumentRecord> result;
  std::string tag = source.empty() ? (variant == VieVariant::linking ? "funsd" : "sroie")
                                   : std::string(source);
  for (const auto& file : sorted_files(dir, ".json")) {
    ++result.report.records_in;
    try {
      DocumentRecord doc = variant == VieVariant::linking
                               ? load_linking_page(file, tag, result.report)
                               : load_entity_page(file, tag, result.report);
      if (auto bad = validate_document(doc); !bad.empty()) throw Error("ingest", doc.doc_id, bad);
      result.items.push_back(std::move(doc));
      ++result.report.records_out;
    } catch (const Json::exception& e) {
      result.report.skip(file.filename().string() + ": schema error: " + e.what());
    } catch (const std::exception& e) {
      result.report.skip(file.filename().string() + ": " + e.what());
    }
  }
  return result;
}

LoadResult<MRCItem> load_mrc_corpus(const fs::path& file, std::string_view source) {
  LoadResult<MRCItem> result;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(file)) {
    ++line_no;
    ++result.report.records_in;
    const std::string ctx = file.filename().string() + ":" + std::to_string(line_no);
    try {
      Json j = parse_json(line, ctx);
      MRCItem item;
      const Json& id = j.at("feta_id");
      item.item_id = id.is_string() ? id.get<std::string>() : "feta-" + std::to_string(id.get<long>());
      item.question = text::trim(j.at("question").get<std::string>());
      item.answer = text::trim(j.at("answer").get<std::string>());
      item.source = std::string(source);
      if (item.answer.empty()) throw Error("ingest", item.item_id, "empty answer");
      if (item.question.empty()) throw Error("ingest", item.item_id, "empty question");
      const Json& rows = j.at("table_array");
      item.table.n_rows = static_cast<int>(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        item.table.n_cols = std::max(item.table.n_cols, static_cast<int>(rows[r].size()));
        for (std::size_t c = 0; c < rows[r].size(); ++c)
          item.table.cells.push_back(TableCell{static_cast<int>(r) + 1, static_cast<int>(c) + 1,
                                               text::trim(rows[r][c].get<std::string>()),
                                               std::nullopt});
      }
      if (item.table.cells.empty()) throw Error("ingest", item.item_id, "empty table");
      for (const auto& h : j.at("highlighted_cell_ids")) {
        int r = h.at(0).get<int>() + 1, c = h.at(1).get<int>() + 1;
        const TableCell* cell = item.table.find(r, c);
        if (!cell) throw Error("ingest", item.item_id, "highlighted cell outside the table");
        if (cell->text.empty()) throw Error("ingest", item.item_id, "highlighted cell is empty");
        item.highlighted_cells.emplace_back(r, c);
      }
      if (item.highlighted_cells.empty())
        throw Error("ingest", item.item_id, "no highlighted cells");
      result.items.push_back(std::move(item));
      ++result.report.records_out;
    } catch (const Json::exception& e) {
      result.report.skip(ctx + ": schema error: " + e.what());
    } catch (const std::exception& e) {
      result.report.skip(ctx + ": " + e.what());
    }
  }
  return result;
}

}  // namespace layoutinstruct
