#include "layoutinstruct/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <set>

#include "layoutinstruct/assembler.hpp"
#include "layoutinstruct/core.hpp"
#include "layoutinstruct/cot_builder.hpp"
#include "layoutinstruct/eval.hpp"
#include "layoutinstruct/ingest.hpp"
#include "layoutinstruct/llm_client.hpp"
#include "layoutinstruct/parallel.hpp"
#include "layoutinstruct/pretrain_region.hpp"
#include "layoutinstruct/pretrain_segment.hpp"
#include "layoutinstruct/random.hpp"
#include "layoutinstruct/text.hpp"

namespace fs = std::filesystem;

namespace layoutinstruct {

namespace {

constexpr std::size_t kMaxReportedSkips = 50;

std::optional<fs::path> opt_path(const Json& j, const char* key, const fs::path& base) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  fs::path p = it->get<std::string>();
  return p.is_absolute() ? p : base / p;
}

void check_input(const char* key, const std::optional<fs::path>& p) {
  if (p && !fs::exists(*p)) throw MissingInput(key, *p);
}

Json load_report_json(const LoadReport& r) {
  Json j = Json::object();
  j["records_in"] = r.records_in;
  j["records_out"] = r.records_out;
  j["records_skipped"] = r.records_skipped;
  j["warnings"] = r.warnings;
  return j;
}

void log_report(std::string_view what, const LoadReport& r) {
  spdlog::info("{}: {} in, {} loaded, {} skipped, {} warnings", what, r.records_in, r.records_out,
               r.records_skipped, r.warnings);
  for (const auto& m : r.messages) spdlog::debug("{}: {}", what, m);
}

fs::path out_dir(const PipelineConfig& config, const RunOptions& options) {
  fs::path dir = options.out_dir ? *options.out_dir : config.out_dir;
  fs::create_directories(dir);
  return dir;
}

TemplateBank bank_for(const PipelineConfig& config) {
  return config.resources ? TemplateBank::load(*config.resources) : TemplateBank::builtin();
}

// Remembers generation failures so a strict run can abort after the workers
// finish. Builders treat a failed call as a skipped record.
class FailureGuard : public TextGenerator {
 public:
  explicit FailureGuard(TextGenerator& inner) : inner_(inner) {}

  std::string complete(const GenerationRequest& req) override {
    try {
      return inner_.complete(req);
    } catch (const GenerationError& e) {
      std::lock_guard lock(mu_);
      failures_.insert(e.what());
      throw;
    }
  }

  std::size_t failures() const {
    std::lock_guard lock(mu_);
    return failures_.size();
  }

  std::string first_failure() const {
    std::lock_guard lock(mu_);
    return failures_.empty() ? std::string() : *failures_.begin();
  }

 private:
  TextGenerator& inner_;
  mutable std::mutex mu_;
  std::set<std::string> failures_;
};

struct ClientStack {
  std::unique_ptr<TextGenerator> base;
  std::unique_ptr<CachedClient> cache;
  std::unique_ptr<FailureGuard> guard;

  TextGenerator& top() { return *guard; }

  void check_strict(bool strict) const {
    if (strict && guard->failures() > 0)
      throw Error("llm-client", "",
                  std::to_string(guard->failures()) + " generation failure(s); first: " +
                      guard->first_failure());
  }
};

ClientStack make_client(const PipelineConfig& config, const RunOptions& options) {
  ClientStack stack;
  if (options.mock_llm) {
    if (config.mock_canned) {
      stack.base = std::make_unique<MockClient>(MockClient::read_canned(*config.mock_canned), options.strict);
    } else {
      stack.base = std::make_unique<MockClient>(std::map<std::string, std::string>{}, options.strict);
    }
  } else {
    if (config.endpoint_url.empty())
      throw Error("llm-client", "config", "endpoint_url is not set (use --mock-llm for offline runs)");
    ChatConfig cc;
    cc.endpoint_url = config.endpoint_url;
    cc.model_name = config.model_name;
    stack.base = std::make_unique<ChatCompletionClient>(cc);
  }
  TextGenerator* inner = stack.base.get();
  if (config.cache_dir && !options.mock_llm) {
    stack.cache = std::make_unique<CachedClient>(*inner, *config.cache_dir);
    inner = stack.cache.get();
  }
  stack.guard = std::make_unique<FailureGuard>(*inner);
  return stack;
}

std::uint64_t feasible_total(const Ratio& ratio, const std::vector<std::size_t>& sizes) {
  const std::uint64_t w_sum = ratio.sum();
  std::uint64_t best = UINT64_MAX;
  for (std::size_t i = 0; i < sizes.size(); ++i)
    if (ratio.weights[i] > 0) best = std::min<std::uint64_t>(best, sizes[i] * w_sum / ratio.weights[i]);
  return best == UINT64_MAX ? 0 : best;
}

struct Skips {
  std::size_t count = 0;
  std::vector<std::string> messages;

  void add(const std::string& m) {
    ++count;
    if (messages.size() < kMaxReportedSkips) messages.push_back(m);
  }
  Json to_json() const { return Json{{"count", count}, {"messages", messages}}; }
};

// Per-job output slot: streams in level order plus skip reasons.
template <std::size_t N>
struct JobOutput {
  std::array<std::vector<InstructionRecord>, N> streams;
  std::vector<std::string> skips;
};

template <typename Fn>
void attempt(std::vector<std::string>& skips, Fn&& fn) {
  try {
    fn();
  } catch (const SkipRecord& e) {
    skips.push_back(e.what());
  }
}

std::vector<InstructionRecord> mix_and_dedup(const std::vector<std::vector<InstructionRecord>>& streams,
                                             const Ratio& ratio, std::uint64_t total,
                                             std::uint64_t seed, bool with_replacement,
                                             const std::vector<std::string>& names) {
  MixOptions mo;
  mo.with_replacement = with_replacement;
  mo.stream_names = names;
  return dedup(mix_by_ratio(streams, ratio, total, seed, mo));
}

void write_json(const fs::path& path, const Json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

}  // namespace

PipelineConfig PipelineConfig::from_json(const Json& j, const fs::path& base_dir) {
  static const std::set<std::string> known = {
      "ocr_dir", "layout_file", "table_file", "sft_image_dir", "html_dir", "mrc_file",
      "linking_dir", "entity_dir", "linking_dataset", "entity_dataset", "endpoint_url",
      "model_name", "cache_dir", "mock_canned", "renderer_cmd", "resources", "pretrain_ratio",
      "sft_ratio", "total", "with_replacement", "mask_rate", "mask_position_k", "max_tokens",
      "variants", "eval_sets", "adapter", "predictions_dir", "prompt_mode", "beam_note",
      "out_dir"};
  if (!j.is_object()) throw Error("cli", "config", "config must be an object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw Error("cli", "config", "unknown key '" + key + "'");

  PipelineConfig c;
  c.base_dir = base_dir;
  try {
    c.ocr_dir = opt_path(j, "ocr_dir", base_dir);
    c.layout_file = opt_path(j, "layout_file", base_dir);
    c.table_file = opt_path(j, "table_file", base_dir);
    c.sft_image_dir = opt_path(j, "sft_image_dir", base_dir);
    c.html_dir = opt_path(j, "html_dir", base_dir);
    c.mrc_file = opt_path(j, "mrc_file", base_dir);
    c.linking_dir = opt_path(j, "linking_dir", base_dir);
    c.entity_dir = opt_path(j, "entity_dir", base_dir);
    c.cache_dir = opt_path(j, "cache_dir", base_dir);
    c.mock_canned = opt_path(j, "mock_canned", base_dir);
    c.resources = opt_path(j, "resources", base_dir);
    c.predictions_dir = opt_path(j, "predictions_dir", base_dir);
    if (auto out = opt_path(j, "out_dir", base_dir)) c.out_dir = *out;
    c.linking_dataset = j.value("linking_dataset", c.linking_dataset);
    c.entity_dataset = j.value("entity_dataset", c.entity_dataset);
    c.endpoint_url = j.value("endpoint_url", c.endpoint_url);
    c.model_name = j.value("model_name", c.model_name);
    c.renderer_cmd = j.value("renderer_cmd", c.renderer_cmd);
    c.pretrain_ratio = j.value("pretrain_ratio", c.pretrain_ratio);
    c.sft_ratio = j.value("sft_ratio", c.sft_ratio);
    if (j.contains("total") && !j["total"].is_null()) c.total = j["total"].get<std::uint64_t>();
    c.with_replacement = j.value("with_replacement", c.with_replacement);
    c.mask_rate = j.value("mask_rate", c.mask_rate);
    c.mask_position_k = j.value("mask_position_k", c.mask_position_k);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    if (j.contains("variants")) {
      const auto& v = j["variants"];
      if (v.contains("tlr_formats")) {
        c.variants.tlr_formats.clear();
        for (const auto& f : v["tlr_formats"])
          c.variants.tlr_formats.push_back(tlr_format_from_string(f.get<std::string>()));
      }
      c.variants.mvlm = v.value("mvlm", c.variants.mvlm);
      c.variants.mask_position = v.value("mask_position", c.variants.mask_position);
      c.variants.geometric = v.value("geometric", c.variants.geometric);
      c.variants.tu_logical = v.value("tu_logical", c.variants.tu_logical);
      c.variants.tu_content = v.value("tu_content", c.variants.tu_content);
    }
    if (j.contains("eval_sets"))
      for (const auto& p : j["eval_sets"]) {
        fs::path path = p.get<std::string>();
        c.eval_sets.push_back(path.is_absolute() ? path : base_dir / path);
      }
    c.adapter = j.value("adapter", c.adapter);
    c.prompt_mode = j.value("prompt_mode", c.prompt_mode);
    c.beam_note = j.value("beam_note", c.beam_note);
  } catch (const Json::exception& e) {
    throw Error("cli", "config", e.what());
  }
  if (c.adapter != "gold_echo" && c.adapter != "predictions" && c.adapter != "endpoint")
    throw Error("cli", "config", "unknown adapter '" + c.adapter + "'");
  Ratio::parse(c.pretrain_ratio);
  Ratio::parse(c.sft_ratio);
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& file) {
  if (!fs::exists(file)) throw MissingInput("config", file);
  Json j;
  try {
    j = Json::parse(read_file(file));
  } catch (const Json::parse_error& e) {
    throw Error("cli", file.string(), e.what());
  }
  return from_json(j, fs::absolute(file).parent_path());
}

std::vector<DocumentRecord> load_pretrain_text_docs(const PipelineConfig& config, Json* report) {
  if (!config.ocr_dir) return {};
  check_input("ocr_dir", config.ocr_dir);
  auto loaded = load_ocr_corpus(*config.ocr_dir);
  log_report("ocr", loaded.report);
  if (report) (*report)["ocr"] = load_report_json(loaded.report);
  std::vector<DocumentRecord> docs;
  docs.reserve(loaded.items.size());
  for (auto& d : loaded.items) docs.push_back(truncate_document(d, config.max_tokens).doc);
  return docs;
}

std::vector<CorpusSource> load_sft_sources(const PipelineConfig& config, Json* report) {
  check_input("sft_image_dir", config.sft_image_dir);
  check_input("html_dir", config.html_dir);
  check_input("mrc_file", config.mrc_file);
  std::vector<CorpusSource> sources;
  if (config.sft_image_dir) {
    auto loaded = load_ocr_corpus(*config.sft_image_dir, "image");
    log_report("sft images", loaded.report);
    if (report) (*report)["image"] = load_report_json(loaded.report);
    for (auto& d : loaded.items)
      sources.push_back(CorpusSource{SourceKind::image, truncate_document(d, config.max_tokens).doc});
  }
  if (config.html_dir) {
    auto loaded = load_html_sources(*config.html_dir);
    log_report("sft html", loaded.report);
    if (report) (*report)["html"] = load_report_json(loaded.report);
    for (auto& s : loaded.items) sources.push_back(std::move(s));
  }
  if (config.mrc_file) {
    auto loaded = load_mrc_corpus(*config.mrc_file);
    log_report("sft mrc", loaded.report);
    if (report) (*report)["mrc"] = load_report_json(loaded.report);
    for (auto& m : loaded.items) sources.push_back(CorpusSource{SourceKind::mrc, std::move(m)});
  }
  return sources;
}

CommandResult cmd_build_pretrain(const PipelineConfig& config, const RunOptions& options) {
  check_input("ocr_dir", config.ocr_dir);
  check_input("layout_file", config.layout_file);
  check_input("table_file", config.table_file);
  if (!config.ocr_dir && !config.layout_file && !config.table_file)
    throw Error("cli", "config", "build-pretrain needs at least one of ocr_dir, layout_file, table_file");

  Json loads = Json::object();
  const auto text_docs = load_pretrain_text_docs(config, &loads);
  std::vector<DocumentRecord> layout_docs, table_docs;
  if (config.layout_file) {
    auto loaded = load_layout_corpus(*config.layout_file);
    log_report("layout", loaded.report);
    loads["layout"] = load_report_json(loaded.report);
    std::map<std::string, const DocumentRecord*> by_id;
    for (const auto& d : text_docs) by_id[d.doc_id] = &d;
    for (auto& d : loaded.items) {
      if (auto it = by_id.find(d.doc_id); it != by_id.end()) d.segments = it->second->segments;
      layout_docs.push_back(std::move(d));
    }
  }
  if (config.table_file) {
    auto loaded = load_table_corpus(*config.table_file);
    log_report("table", loaded.report);
    loads["table"] = load_report_json(loaded.report);
    table_docs = std::move(loaded.items);
  }

  ClientStack client = make_client(config, options);
  const TemplateBank bank = bank_for(config);
  const auto& v = config.variants;
  const std::uint64_t gs = options.seed;
  auto seed_for = [gs](const DocumentRecord& d, Task t, std::uint64_t variant) {
    return derive_seed(gs, d.doc_id, to_string(t), variant);
  };

  // Jobs: text docs, then layout docs, then table docs.
  const std::size_t n_jobs = text_docs.size() + layout_docs.size() + table_docs.size();
  std::vector<JobOutput<3>> outputs(n_jobs);
  parallel_for(n_jobs, options.workers, [&](std::size_t i) {
    auto& out = outputs[i];
    auto& [doc_stream, region_stream, segment_stream] = out.streams;
    if (i < text_docs.size()) {
      const auto& d = text_docs[i];
      attempt(out.skips, [&] { doc_stream.push_back(build_ddd(d, client.top(), seed_for(d, Task::ddd, 0), bank)); });
      for (std::size_t f = 0; f < v.tlr_formats.size(); ++f)
        attempt(out.skips, [&] {
          doc_stream.push_back(build_tlr(d, v.tlr_formats[f], seed_for(d, Task::tlr, f), bank));
        });
      for (int k = 0; k < v.mvlm; ++k)
        attempt(out.skips, [&] {
          segment_stream.push_back(build_mvlm(d, config.mask_rate, seed_for(d, Task::mvlm, k), bank));
        });
      for (int k = 0; k < v.mask_position; ++k)
        attempt(out.skips, [&] {
          segment_stream.push_back(build_mask_position(
              d, static_cast<std::size_t>(config.mask_position_k), seed_for(d, Task::mask_pos, k), bank));
        });
      for (int k = 0; k < v.geometric; ++k)
        attempt(out.skips, [&] {
          segment_stream.push_back(build_geometric(d, seed_for(d, Task::geometric, k), bank));
        });
      return;
    }
    i -= text_docs.size();
    if (i < layout_docs.size()) {
      const auto& d = layout_docs[i];
      auto kinds = region_kinds(d);
      for (std::size_t k = 0; k < kinds.size(); ++k)
        attempt(out.skips, [&] {
          region_stream.push_back(build_dla_locate(d, kinds[k], seed_for(d, Task::dla_locate, k), bank));
        });
      for (std::size_t r = 0; r < d.regions.size(); ++r)
        attempt(out.skips, [&] {
          region_stream.push_back(build_dla_classify(d, r, seed_for(d, Task::dla_classify, r), bank));
        });
      return;
    }
    i -= layout_docs.size();
    const auto& d = table_docs[i];
    attempt(out.skips, [&] {
      region_stream.push_back(build_tu(d, TuKind::shape, seed_for(d, Task::tu_shape, 0), bank));
    });
    for (int k = 0; k < v.tu_logical; ++k)
      attempt(out.skips, [&] {
        region_stream.push_back(build_tu(d, TuKind::logical, seed_for(d, Task::tu_logical, k), bank));
      });
    for (int k = 0; k < v.tu_content; ++k)
      attempt(out.skips, [&] {
        region_stream.push_back(build_tu(d, TuKind::content, seed_for(d, Task::tu_content, k), bank));
      });
  });
  client.check_strict(options.strict);

  std::vector<std::vector<InstructionRecord>> streams(3);
  Skips skips;
  for (auto& out : outputs) {
    for (std::size_t s = 0; s < 3; ++s)
      std::move(out.streams[s].begin(), out.streams[s].end(), std::back_inserter(streams[s]));
    for (auto& m : out.skips) skips.add(m);
  }
  for (auto& s : streams) s = dedup(s);

  const Ratio ratio = Ratio::parse(config.pretrain_ratio);
  std::vector<std::size_t> sizes;
  for (const auto& s : streams) sizes.push_back(s.size());
  const std::uint64_t total =
      options.total ? *options.total : config.total ? *config.total : feasible_total(ratio, sizes);
  const std::vector<std::string> names = {"document", "region", "segment"};
  auto corpus = mix_and_dedup(streams, ratio, total, gs, config.with_replacement, names);

  const fs::path dir = out_dir(config, options);
  emit_jsonl(corpus, dir / "pretrain.jsonl");
  Json summary = Json::object();
  summary["stats"] = dataset_stats(corpus).to_json();
  Json build = Json::object();
  build["seed"] = gs;
  build["ratio"] = config.pretrain_ratio;
  build["total"] = total;
  build["quotas"] = apportion(ratio, total);
  build["stream_sizes"] = Json{{"document", sizes[0]}, {"region", sizes[1]}, {"segment", sizes[2]}};
  build["inputs"] = loads;
  build["skips"] = skips.to_json();
  summary["build"] = build;
  write_json(dir / "pretrain_stats.json", summary);
  spdlog::info("pretrain: {} records written to {} ({} skipped builds)", corpus.size(),
               (dir / "pretrain.jsonl").string(), skips.count);
  return CommandResult{{dir / "pretrain.jsonl", dir / "pretrain_stats.json"}, summary};
}

CommandResult cmd_build_sft(const PipelineConfig& config, const RunOptions& options) {
  if (!config.sft_image_dir && !config.html_dir && !config.mrc_file)
    throw Error("cli", "config", "build-sft needs at least one of sft_image_dir, html_dir, mrc_file");
  Json loads = Json::object();
  const auto sources = load_sft_sources(config, &loads);

  ClientStack client = make_client(config, options);
  const TemplateBank bank = bank_for(config);
  std::vector<SourceBuild> builds(sources.size());
  parallel_for(sources.size(), options.workers, [&](std::size_t i) {
    builds[i] = build_cot_records(sources[i], client.top(), options.seed, bank);
  });
  client.check_strict(options.strict);

  std::vector<std::vector<InstructionRecord>> streams(3);
  Skips skips;
  std::size_t generated = 0, discarded = 0, dropped = 0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    auto& b = builds[i];
    if (b.skipped) skips.add(sources[i].id() + ": " + b.reason);
    generated += b.pairs_generated;
    discarded += b.pairs_discarded;
    dropped += b.objects_dropped;
    const std::size_t s = sources[i].kind == SourceKind::image ? 0 : sources[i].kind == SourceKind::html ? 1 : 2;
    std::move(b.records.begin(), b.records.end(), std::back_inserter(streams[s]));
  }
  for (auto& s : streams) s = dedup(s);

  const Ratio ratio = Ratio::parse(config.sft_ratio);
  std::vector<std::size_t> sizes;
  for (const auto& s : streams) sizes.push_back(s.size());
  const std::uint64_t total =
      options.total ? *options.total : config.total ? *config.total : feasible_total(ratio, sizes);
  const std::vector<std::string> names = {"image", "html", "mrc"};
  auto corpus = mix_and_dedup(streams, ratio, total, options.seed, config.with_replacement, names);

  const fs::path dir = out_dir(config, options);
  emit_jsonl(corpus, dir / "sft.jsonl");
  std::vector<CorpusSource> rendered;
  for (const auto& s : sources)
    if (s.kind != SourceKind::image) rendered.push_back(s);
  auto manifest = emit_render_manifest(rendered, dir, config.renderer_cmd);

  Json summary = Json::object();
  summary["stats"] = dataset_stats(corpus).to_json();
  Json build = Json::object();
  build["seed"] = options.seed;
  build["ratio"] = config.sft_ratio;
  build["total"] = total;
  build["quotas"] = apportion(ratio, total);
  build["stream_sizes"] = Json{{"image", sizes[0]}, {"html", sizes[1]}, {"mrc", sizes[2]}};
  build["pairs_generated"] = generated;
  build["pairs_discarded"] = discarded;
  build["objects_dropped"] = dropped;
  build["inputs"] = loads;
  build["skips"] = skips.to_json();
  build["render"] = Json{{"pending", manifest.pending}, {"done", manifest.done},
                         {"failed", manifest.failed}, {"write_failed", manifest.write_failed}};
  summary["build"] = build;
  write_json(dir / "sft_stats.json", summary);
  spdlog::info("sft: {} records written to {}; {} of {} pairs discarded", corpus.size(),
               (dir / "sft.jsonl").string(), discarded, generated);
  return CommandResult{{dir / "sft.jsonl", dir / "sft_stats.json", dir / "render_manifest.jsonl"},
                       summary};
}

CommandResult cmd_build_eval(const PipelineConfig& config, const RunOptions& options) {
  check_input("linking_dir", config.linking_dir);
  check_input("entity_dir", config.entity_dir);
  if (!config.linking_dir && !config.entity_dir)
    throw Error("cli", "config", "build-eval needs linking_dir or entity_dir");
  const fs::path dir = out_dir(config, options);
  CommandResult result;
  result.summary = Json::object();
  auto emit = [&](const std::string& dataset, const EvalBuild& built, const LoadReport& report) {
    fs::path path = dir / ("eval_" + dataset + ".jsonl");
    write_eval_set(built.items, path);
    result.outputs.push_back(path);
    result.summary[dataset] = Json{{"items", built.items.size()},
                                   {"dropped_multi", built.dropped_multi},
                                   {"dropped_other", built.dropped_other},
                                   {"input", load_report_json(report)}};
    spdlog::info("eval {}: {} items ({} filtered as repeated, {} incomplete)", dataset,
                 built.items.size(), built.dropped_multi, built.dropped_other);
  };
  if (config.linking_dir) {
    auto loaded = load_vie_corpus(*config.linking_dir, VieVariant::linking, config.linking_dataset);
    log_report(config.linking_dataset, loaded.report);
    emit(config.linking_dataset, build_qa_for_vie_linking(loaded.items), loaded.report);
  }
  if (config.entity_dir) {
    auto loaded = load_vie_corpus(*config.entity_dir, VieVariant::entity, config.entity_dataset);
    log_report(config.entity_dataset, loaded.report);
    emit(config.entity_dataset, build_qa_for_vie_entities(loaded.items), loaded.report);
  }
  return result;
}

CommandResult cmd_score(const PipelineConfig& config, const RunOptions& options) {
  const fs::path dir = out_dir(config, options);
  std::vector<fs::path> sets = config.eval_sets;
  if (sets.empty())
    for (const auto& f : sorted_files(dir, ".jsonl"))
      if (text::starts_with(f.filename().string(), "eval_")) sets.push_back(f);
  if (sets.empty()) throw Error("cli", "score", "no evaluation sets configured or found in " + dir.string());
  for (const auto& s : sets) check_input("eval_sets", s);

  std::optional<ClientStack> client;
  if (config.adapter == "endpoint") client.emplace(make_client(config, options));
  const PromptMode mode = prompt_mode_from_string(config.prompt_mode);

  CommandResult result;
  result.summary = Json::object();
  for (const auto& set : sets) {
    const std::string stem = set.stem().string();
    auto items = read_eval_set(set);
    Adapter adapter;
    if (config.adapter == "gold_echo") {
      adapter = gold_echo_adapter();
    } else if (config.adapter == "predictions") {
      if (!config.predictions_dir) throw Error("cli", "config", "adapter 'predictions' needs predictions_dir");
      fs::path preds = *config.predictions_dir / (stem + ".jsonl");
      check_input("predictions_dir", preds);
      adapter = prediction_map_adapter(read_predictions(preds));
    } else {
      adapter = endpoint_adapter(client->top(), mode);
    }
    auto report = score_run(items, adapter, config.beam_note, options.workers);
    fs::path report_stem = dir / ("score_" + stem);
    write_score_report(report, report_stem);
    result.outputs.push_back(report_stem.string() + ".jsonl");
    result.outputs.push_back(report_stem.string() + ".txt");
    result.summary[stem] = report.summary_json();
    spdlog::info("score {}: {} items, mean {:.4f}, {} flagged", stem, report.n_items,
                 report.mean_score, report.n_flagged);
  }
  if (client) client->check_strict(options.strict);
  return result;
}

}  // namespace layoutinstruct
