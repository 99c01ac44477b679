#include "support.hpp"

#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "layoutinstruct/cot_builder.hpp"
#include "layoutinstruct/json_io.hpp"
#include "layoutinstruct/llm_client.hpp"
#include "layoutinstruct/pretrain_doc.hpp"
#include "layoutinstruct/random.hpp"
#include "layoutinstruct/text.hpp"

namespace fs = std::filesystem;
using namespace layoutinstruct;

namespace lit {

fs::path fixture_dir() { return LAYOUTINSTRUCT_FIXTURE_DIR; }
fs::path cli_path() { return LAYOUTINSTRUCT_CLI_PATH; }

fs::path scratch_dir(const std::string& name) {
  static std::atomic<int> counter{0};
  fs::path dir = fs::temp_directory_path() /
                 ("layoutinstruct-test-" + std::to_string(::getpid()) + "-" +
                  std::to_string(counter++) + "-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& log) {
  std::string redirect = log.empty() ? " >/dev/null 2>&1" : " >'" + log.string() + "' 2>&1";
  int status = std::system(("'" + cli_path().string() + "' " + args + redirect).c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string description_for(const DocumentRecord& doc, std::size_t index) {
  std::string first = doc.segments.empty() ? "" : doc.segments.front().text;
  std::string out = "This page holds " + std::to_string(doc.segments.size()) +
                    " text blocks. Its first block reads \"" + first + "\".";
  // One page gets a description past the stated word cap.
  const std::size_t filler = index == 0 ? 520 : 20 + index % 40;
  Rng rng(derive_seed(7, doc.doc_id, "canned_ddd"));
  for (std::size_t i = 0; i < filler; ++i) {
    const auto& seg = doc.segments[rng.below(doc.segments.size())];
    auto ws = text::split_whitespace(seg.text);
    out += " " + ws[rng.below(ws.size())];
  }
  return out + ".";
}

Json qa_object(std::string question, std::string answer, std::string analysis,
               std::vector<std::string> sentences, std::string explanation) {
  Json o = Json::object();
  o["question"] = std::move(question);
  o["answer"] = std::move(answer);
  o["analysis"] = std::move(analysis);
  o["relevant_sentences"] = std::move(sentences);
  o["explanation"] = std::move(explanation);
  return o;
}

std::string qa_reply(const std::string& id, const std::vector<TextSegment>& segments) {
  Rng rng(derive_seed(7, id, "canned_qa"));
  Json list = Json::array();
  for (int q = 0; q < 4; ++q) {
    std::vector<std::string> sentences;
    const auto& seg = segments[rng.below(segments.size())];
    auto words = text::split_whitespace(seg.text);
    if (q == 1 && words.size() >= 3) {
      // A fragment of a block rather than the whole block.
      sentences.push_back(words[0] + " " + words[1]);
    } else {
      sentences.push_back(seg.text);
    }
    if (q == 2) sentences.push_back(segments[rng.below(segments.size())].text);
    std::string answer = sentences.front();
    list.push_back(qa_object(
        "Question " + std::to_string(q + 1) + ": which block mentions \"" + words.front() + "\"?",
        answer,
        "The question asks for the block that mentions \"" + words.front() + "\" (item " +
            std::to_string(q + 1) + ").",
        sentences,
        "The located block reads \"" + answer + "\", which answers the question."));
  }
  list.push_back(qa_object("Question 5: what does the footer claim?", "Nothing verifiable",
                           "The question asks about a footer.", {kUngroundedSentence},
                           "The footer text is quoted."));
  return "Here are the question-answer pairs:\n" + list.dump(2) + "\n";
}

}  // namespace

std::map<std::string, std::string> synthesize_canned(const PipelineConfig& pretrain,
                                                     const PipelineConfig& sft,
                                                     const TemplateBank& bank) {
  std::map<std::string, std::string> canned;
  auto docs = load_pretrain_text_docs(pretrain);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (docs[i].segments.empty()) continue;
    canned[prompt_digest(render_ddd_prompt(docs[i], bank))] = description_for(docs[i], i);
  }
  for (const auto& src : load_sft_sources(sft)) {
    if (src.kind == SourceKind::mrc) continue;
    DocRepresentation rep;
    try {
      rep = represent_document(src);
    } catch (const Error&) {
      continue;
    }
    if (rep.segments.empty()) continue;
    canned[prompt_digest(render_qa_cot_prompt(rep, bank))] = qa_reply(src.id(), rep.segments);
  }
  return canned;
}

std::string canned_jsonl(const std::map<std::string, std::string>& canned) {
  std::string out;
  for (const auto& [hash, response] : canned) {
    Json j = Json::object();
    j["prompt_sha256"] = hash;
    j["response"] = response;
    out += dump_line(j) + "\n";
  }
  return out;
}

}  // namespace lit
