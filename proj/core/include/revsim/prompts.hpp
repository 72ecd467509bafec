#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "revsim/error.hpp"

namespace revsim {

/// Named prompt templates with `{placeholder}` substitution. Defaults ship
/// with the library; a directory of `<name>.txt` files overrides them one by
/// one.
class PromptSet {
 public:
  static PromptSet defaults();
  // Defaults overlaid with every `*.txt` file found in `dir`.
  static PromptSet with_overrides(const std::filesystem::path& dir);

  bool has(std::string_view name) const;
  const std::string& raw(std::string_view name) const;
  void set(std::string name, std::string text);

  // Throws Error when the template is unknown or references a variable that
  // is not supplied. `{{` and `}}` render as literal braces.
  std::string render(std::string_view name, const std::map<std::string, std::string, std::less<>>& vars) const;

  // Throws Error naming the first missing template.
  void require(const std::vector<std::string>& names) const;

  static const std::vector<std::string>& review_templates();
  static const std::vector<std::string>& research_templates();

 private:
  std::map<std::string, std::string, std::less<>> templates_;
};

}  // namespace revsim
