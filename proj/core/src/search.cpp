#include "revsim/search.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <nlohmann/json.hpp>

#include "io.hpp"
#include "revsim/docmodel.hpp"

namespace revsim::research {

using nlohmann::json;

void to_json(json& j, const SearchRecord& r) {
  j = json{{"title", r.title}};
  j["year"] = r.year ? json(*r.year) : json(nullptr);
  j["abstract"] = r.abstract ? json(*r.abstract) : json(nullptr);
  j["url"] = r.url ? json(*r.url) : json(nullptr);
}

void from_json(const json& j, SearchRecord& r) {
  j.at("title").get_to(r.title);
  auto opt_str = [&](const char* k) -> std::optional<std::string> {
    auto it = j.find(k);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
  };
  r.year.reset();
  if (auto it = j.find("year"); it != j.end() && !it->is_null()) r.year = it->get<int>();
  r.abstract = opt_str("abstract");
  r.url = opt_str("url");
}

std::vector<std::string> query_terms(std::string_view text) {
  static const std::set<std::string, std::less<>> stop{
      "a",   "an",  "and", "are", "as",   "at",   "by",   "for",  "from", "in",   "into", "is",
      "it",  "of",  "on",  "or",  "the",  "to",   "with", "via",  "we",   "our",  "its",  "that",
      "this", "be", "can", "do",  "does", "how",  "what", "when", "why",  "using", "towards", "toward",
  };
  std::vector<std::string> terms;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && !stop.count(cur)) terms.push_back(cur);
    cur.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else flush();
  }
  flush();
  return terms;
}

FixtureSearchProvider::FixtureSearchProvider(std::vector<SearchRecord> index) : index_(std::move(index)) {}

FixtureSearchProvider FixtureSearchProvider::from_file(const std::filesystem::path& path) {
  std::vector<SearchRecord> records;
  std::size_t line_no = 0;
  auto text = detail::read_file(path);
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      records.push_back(json::parse(line).get<SearchRecord>());
    } catch (const json::exception& e) {
      throw CorpusError(CorpusError::Kind::malformed_line, path.string(), e.what(), line_no);
    }
    if (records.back().title.empty())
      throw CorpusError(CorpusError::Kind::invariant_violation, path.string(), "search record with empty title", line_no);
  }
  return FixtureSearchProvider(std::move(records));
}

std::vector<SearchRecord> FixtureSearchProvider::search(std::string_view query, std::size_t limit) const {
  auto terms = query_terms(query);
  std::set<std::string, std::less<>> wanted(terms.begin(), terms.end());
  std::vector<std::pair<std::size_t, std::size_t>> scored;  // (score, index)
  for (std::size_t i = 0; i < index_.size(); ++i) {
    auto haystack = query_terms(index_[i].title + " " + index_[i].abstract.value_or(""));
    std::set<std::string, std::less<>> have(haystack.begin(), haystack.end());
    std::size_t score = 0;
    for (const auto& t : wanted) score += have.count(t);
    if (score > 0) scored.emplace_back(score, i);
  }
  std::stable_sort(scored.begin(), scored.end(), [](auto a, auto b) { return a.first > b.first; });
  std::vector<SearchRecord> out;
  for (std::size_t k = 0; k < scored.size() && out.size() < limit; ++k) out.push_back(index_[scored[k].second]);
  return out;
}

}  // namespace revsim::research
