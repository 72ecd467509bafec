#include "revsim/prompts.hpp"

#include "assets.hpp"
#include "io.hpp"

namespace revsim {

const std::vector<std::string>& PromptSet::review_templates() {
  static const std::vector<std::string> names{
      "review.system", "review.assessment1", "review.rebuttal", "review.assessment2", "review.meta",
  };
  return names;
}

const std::vector<std::string>& PromptSet::research_templates() {
  static const std::vector<std::string> names{
      "research.system", "research.ideas",  "research.rank",   "research.section",
      "research.fix",    "research.revise", "research.polish",
  };
  return names;
}

PromptSet PromptSet::defaults() {
  PromptSet set;
  for (const auto* list : {&review_templates(), &research_templates()}) {
    for (const auto& name : *list) {
      auto text = detail::builtin_asset(name + ".txt");
      if (!text) throw Error("built-in prompt '" + name + "' missing");
      std::string t(*text);
      while (!t.empty() && t.back() == '\n') t.pop_back();
      set.templates_[name] = std::move(t);
    }
  }
  return set;
}

PromptSet PromptSet::with_overrides(const std::filesystem::path& dir) {
  PromptSet set = defaults();
  if (!std::filesystem::is_directory(dir)) throw Error("prompt directory '" + dir.string() + "' not found");
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::string text = detail::read_file(entry.path());
    while (!text.empty() && text.back() == '\n') text.pop_back();
    set.templates_[entry.path().stem().string()] = std::move(text);
  }
  return set;
}

bool PromptSet::has(std::string_view name) const { return templates_.find(name) != templates_.end(); }

const std::string& PromptSet::raw(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw Error("unknown prompt template '" + std::string(name) + "'");
  return it->second;
}

void PromptSet::set(std::string name, std::string text) { templates_[std::move(name)] = std::move(text); }

std::string PromptSet::render(std::string_view name,
                              const std::map<std::string, std::string, std::less<>>& vars) const {
  const std::string& tpl = raw(name);
  std::string out;
  out.reserve(tpl.size());
  for (std::size_t i = 0; i < tpl.size(); ++i) {
    char c = tpl[i];
    if (c == '{' && i + 1 < tpl.size() && tpl[i + 1] == '{') {
      out += '{';
      ++i;
    } else if (c == '}' && i + 1 < tpl.size() && tpl[i + 1] == '}') {
      out += '}';
      ++i;
    } else if (c == '{') {
      auto close = tpl.find('}', i);
      if (close == std::string::npos) throw Error("unterminated placeholder in '" + std::string(name) + "'");
      auto var = std::string_view(tpl).substr(i + 1, close - i - 1);
      auto it = vars.find(var);
      if (it == vars.end())
        throw Error("template '" + std::string(name) + "' needs variable '" + std::string(var) + "'");
      out += it->second;
      i = close;
    } else {
      out += c;
    }
  }
  return out;
}

void PromptSet::require(const std::vector<std::string>& names) const {
  for (const auto& n : names)
    if (!has(n)) throw Error("prompt set lacks template '" + n + "'");
}

}  // namespace revsim
