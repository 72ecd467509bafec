#include "revsim/analysis/syntax.hpp"

#include <algorithm>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "io.hpp"

namespace revsim::analysis {

void validate(const ParsedSentence& s) {
  auto bad = [](const std::string& why) { throw AnalysisError(AnalysisError::Kind::invalid_parse, "invalid parse: " + why); };
  if (s.tokens.empty()) bad("sentence has no tokens");
  if (s.heads.size() != s.tokens.size() || s.labels.size() != s.tokens.size())
    bad("tokens/heads/labels lengths differ (" + std::to_string(s.tokens.size()) + "/" + std::to_string(s.heads.size()) +
        "/" + std::to_string(s.labels.size()) + ")");
  const auto n = static_cast<int>(s.tokens.size());
  int roots = 0;
  for (int h : s.heads) {
    if (h < 0 || h > n) bad("head " + std::to_string(h) + " outside 0.." + std::to_string(n));
    roots += h == 0;
  }
  if (roots != 1) bad("expected exactly one root, found " + std::to_string(roots));
}

double mean_dep_distance(std::span<const ParsedSentence> parses) {
  long total = 0;
  long count = 0;
  for (const auto& s : parses) {
    validate(s);
    for (std::size_t i = 0; i < s.heads.size(); ++i) {
      if (s.heads[i] == 0) continue;
      total += std::labs(static_cast<long>(i + 1) - s.heads[i]);
      ++count;
    }
  }
  if (count == 0) throw AnalysisError(AnalysisError::Kind::no_tokens, "NoTokens");
  return static_cast<double>(total) / static_cast<double>(count);
}

const std::vector<std::string>& subclause_labels() {
  static const std::vector<std::string> labels{"advcl", "ccomp", "xcomp", "acl", "acl:relcl", "csubj"};
  return labels;
}

double subclause_ratio(std::span<const ParsedSentence> parses) {
  const auto& set = subclause_labels();
  std::size_t hits = 0;
  std::size_t tokens = 0;
  for (const auto& s : parses) {
    validate(s);
    tokens += s.tokens.size();
    hits += static_cast<std::size_t>(std::count_if(s.labels.begin(), s.labels.end(), [&](const std::string& l) {
      return std::find(set.begin(), set.end(), l) != set.end();
    }));
  }
  if (tokens == 0) throw AnalysisError(AnalysisError::Kind::no_tokens, "NoTokens");
  return static_cast<double>(hits) / static_cast<double>(tokens);
}

void to_json(nlohmann::json& j, const ParsedSentence& s) {
  j = nlohmann::json{{"tokens", s.tokens}, {"heads", s.heads}, {"labels", s.labels}};
}

void from_json(const nlohmann::json& j, ParsedSentence& s) {
  j.at("tokens").get_to(s.tokens);
  j.at("heads").get_to(s.heads);
  j.at("labels").get_to(s.labels);
}

ParseFixtures parse_parse_fixtures(std::string_view text) {
  ParseFixtures out;
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      auto s = j.get<ParsedSentence>();
      validate(s);
      std::string id = j.contains("paper_id") && j["paper_id"].is_string() ? j["paper_id"].get<std::string>() : "";
      out[id].push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw AnalysisError(AnalysisError::Kind::malformed_input,
                          "parse fixture line " + std::to_string(line_no) + ": " + e.what());
    } catch (const AnalysisError& e) {
      throw AnalysisError(AnalysisError::Kind::malformed_input,
                          "parse fixture line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

ParseFixtures read_parse_fixtures(const std::filesystem::path& path) {
  return parse_parse_fixtures(detail::read_file(path));
}

std::string to_ndjson(const ParseFixtures& fixtures) {
  std::string out;
  for (const auto& [id, sentences] : fixtures) {
    for (const auto& s : sentences) {
      nlohmann::json j = s;
      if (!id.empty()) j["paper_id"] = id;
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

}  // namespace revsim::analysis
