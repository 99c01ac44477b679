#include "layoutinstruct/templates.hpp"

#include <algorithm>
#include <cstdlib>

#include "layoutinstruct/json_io.hpp"
#include "layoutinstruct/text.hpp"
#include "layoutinstruct/types.hpp"

namespace layoutinstruct {

namespace {

bool name_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

// Length of a placeholder starting at tmpl[i] == '{', or 0 if none.
std::size_t placeholder_at(std::string_view tmpl, std::size_t i) {
  std::size_t j = i + 1;
  while (j < tmpl.size() && name_char(tmpl[j])) ++j;
  if (j == i + 1 || j >= tmpl.size() || tmpl[j] != '}') return 0;
  return j - i + 1;
}

}  // namespace

std::vector<std::string> placeholders(std::string_view tmpl) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if ((tmpl[i] == '{' || tmpl[i] == '}') && i + 1 < tmpl.size() && tmpl[i + 1] == tmpl[i]) {
      ++i;
      continue;
    }
    if (tmpl[i] != '{') continue;
    if (std::size_t n = placeholder_at(tmpl, i)) {
      std::string name(tmpl.substr(i + 1, n - 2));
      if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
      i += n - 1;
    }
  }
  return out;
}

std::string substitute(std::string_view tmpl, const Bindings& bindings) {
  std::string out;
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if ((tmpl[i] == '{' || tmpl[i] == '}') && i + 1 < tmpl.size() && tmpl[i + 1] == tmpl[i]) {
      out += tmpl[i++];
      continue;
    }
    if (tmpl[i] == '{') {
      if (std::size_t n = placeholder_at(tmpl, i)) {
        std::string_view name = tmpl.substr(i + 1, n - 2);
        auto it = bindings.find(name);
        if (it == bindings.end()) {
          if (std::find(missing.begin(), missing.end(), name) == missing.end())
            missing.emplace_back(name);
        } else {
          out += it->second;
        }
        i += n - 1;
        continue;
      }
    }
    out += tmpl[i];
  }
  if (!missing.empty())
    throw Error("templates", "", "unresolved placeholder(s): " + text::join(missing, ", "));
  return out;
}

TemplateBank TemplateBank::load(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  TemplateBank bank;
  if (!fs::is_directory(root)) throw Error("templates", root.string(), "not a directory");
  if (fs::is_directory(root / "templates")) {
    for (const auto& entry : fs::directory_iterator(root / "templates")) {
      if (entry.path().extension() != ".txt") continue;
      std::vector<std::string> lines;
      for (auto& l : read_lines(entry.path()))
        if (!text::trim(l).empty()) lines.push_back(std::move(l));
      bank.questions_[entry.path().stem().string()] = std::move(lines);
    }
  }
  if (fs::is_directory(root / "prompts")) {
    for (const auto& entry : fs::directory_iterator(root / "prompts")) {
      if (entry.path().extension() != ".txt") continue;
      std::string body = read_file(entry.path());
      while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
      bank.prompts_[entry.path().stem().string()] = std::move(body);
    }
  }
  return bank;
}

std::filesystem::path TemplateBank::default_root() {
  if (const char* env = std::getenv("LAYOUTINSTRUCT_RESOURCES"); env && *env) return env;
  return LAYOUTINSTRUCT_DEFAULT_RESOURCE_DIR;
}

const TemplateBank& TemplateBank::builtin() {
  static const TemplateBank bank = load(default_root());
  return bank;
}

const std::vector<std::string>& TemplateBank::questions(std::string_view id) const {
  auto it = questions_.find(id);
  if (it == questions_.end() || it->second.empty())
    throw Error("templates", std::string(id), "no question templates");
  return it->second;
}

const std::string& TemplateBank::prompt(std::string_view id) const {
  auto it = prompts_.find(id);
  if (it == prompts_.end()) throw Error("templates", std::string(id), "no such prompt");
  return it->second;
}

bool TemplateBank::has_questions(std::string_view id) const {
  return questions_.find(id) != questions_.end();
}

bool TemplateBank::has_prompt(std::string_view id) const {
  return prompts_.find(id) != prompts_.end();
}

void TemplateBank::set_questions(std::string id, std::vector<std::string> lines) {
  questions_[std::move(id)] = std::move(lines);
}

void TemplateBank::set_prompt(std::string id, std::string body) {
  prompts_[std::move(id)] = std::move(body);
}

}  // namespace layoutinstruct
