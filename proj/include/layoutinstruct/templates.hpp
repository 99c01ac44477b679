#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace layoutinstruct {

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Replaces `{name}` placeholders (name = [a-z0-9_]+) in one pass, so bound
/// values are never rescanned. Braces that do not enclose such a name are
/// literal, and `{{` / `}}` produce a single literal brace. Throws Error
/// listing every placeholder without a binding.
std::string substitute(std::string_view tmpl, const Bindings& bindings);

/// Placeholder names appearing in a template, in first-appearance order.
std::vector<std::string> placeholders(std::string_view tmpl);

/// Instruction templates and generation prompts loaded from a resource tree:
///   <root>/templates/<id>.txt  one question template per line
///   <root>/prompts/<id>.txt    one multi-line prompt per file
class TemplateBank {
 public:
  TemplateBank() = default;
  static TemplateBank load(const std::filesystem::path& root);
  /// The tree shipped with the sources (overridable with LAYOUTINSTRUCT_RESOURCES).
  static const TemplateBank& builtin();
  static std::filesystem::path default_root();

  const std::vector<std::string>& questions(std::string_view id) const;
  const std::string& prompt(std::string_view id) const;
  bool has_questions(std::string_view id) const;
  bool has_prompt(std::string_view id) const;

  void set_questions(std::string id, std::vector<std::string> lines);
  void set_prompt(std::string id, std::string body);

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> questions_;
  std::map<std::string, std::string, std::less<>> prompts_;
};

}  // namespace layoutinstruct
