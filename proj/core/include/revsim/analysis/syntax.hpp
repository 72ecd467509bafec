#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "revsim/analysis/error.hpp"

namespace revsim::analysis {

/// One dependency-parsed sentence. heads[i] is the 1-based index of token
/// i's head, 0 for the root.
struct ParsedSentence {
  std::vector<std::string> tokens;
  std::vector<int> heads;
  std::vector<std::string> labels;

  bool operator==(const ParsedSentence&) const = default;
};

// Throws AnalysisError(invalid_parse) on length mismatch, a root count other
// than one, or out-of-range heads.
void validate(const ParsedSentence& s);

/// Mean |position - head| pooled over every non-root token.
double mean_dep_distance(std::span<const ParsedSentence> parses);

const std::vector<std::string>& subclause_labels();

/// Share of all tokens whose label is a subordinate-clause relation.
double subclause_ratio(std::span<const ParsedSentence> parses);

void to_json(nlohmann::json& j, const ParsedSentence& s);
void from_json(const nlohmann::json& j, ParsedSentence& s);

/// Parse fixtures: NDJSON of {paper_id?, tokens, heads, labels}. Records
/// without a paper id are grouped under "".
using ParseFixtures = std::map<std::string, std::vector<ParsedSentence>, std::less<>>;
ParseFixtures read_parse_fixtures(const std::filesystem::path& path);
ParseFixtures parse_parse_fixtures(std::string_view text);
std::string to_ndjson(const ParseFixtures& fixtures);

/// Anything that can dependency-parse pre-tokenized sentences.
class SentenceParser {
 public:
  virtual ~SentenceParser() = default;
  virtual std::vector<ParsedSentence> parse(const std::vector<std::vector<std::string>>& sentences) = 0;
};

}  // namespace revsim::analysis
