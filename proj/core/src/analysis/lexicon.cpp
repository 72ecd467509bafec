#include "revsim/analysis/lexicon.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "assets.hpp"
#include "io.hpp"
#include "revsim/analysis/text.hpp"

namespace revsim::analysis {

namespace {

// Lowercased tokens, cut into runs at sentence punctuation and blank lines so
// a phrase cannot straddle two sentences.
std::vector<std::vector<std::string>> token_runs(std::string_view text) {
  std::vector<std::vector<std::string>> runs;
  std::size_t start = 0;
  auto emit = [&](std::size_t end) {
    auto toks = tokenize(text.substr(start, end - start));
    for (auto& t : toks) t = detail::to_lower(t);
    if (!toks.empty()) runs.push_back(std::move(toks));
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    bool barrier = c == '.' || c == '?' || c == '!' || c == ';';
    // Keep decimal points inside numbers.
    if (c == '.' && i > 0 && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i - 1])) &&
        std::isdigit(static_cast<unsigned char>(text[i + 1])))
      barrier = false;
    if (c == '\n') {
      std::size_t j = i + 1;
      while (j < text.size() && (text[j] == ' ' || text[j] == '\t' || text[j] == '\r')) ++j;
      barrier = j < text.size() && text[j] == '\n';
    }
    if (barrier) {
      emit(i);
      start = i + 1;
    }
  }
  emit(text.size());
  return runs;
}

std::string builtin(std::string_view name) {
  auto a = detail::builtin_asset(name);
  if (!a) throw Error("missing bundled asset " + std::string(name));
  return std::string(*a);
}

}  // namespace

PhraseLexicon PhraseLexicon::parse(std::string_view text) {
  PhraseLexicon lex;
  for (auto line : detail::split_lines(text)) {
    auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto toks = tokenize(t);
    if (toks.empty()) continue;
    for (auto& tok : toks) tok = detail::to_lower(tok);
    auto& bucket = lex.by_first_[toks.front()];
    if (std::find(bucket.begin(), bucket.end(), toks) != bucket.end()) continue;
    bucket.push_back(std::move(toks));
    ++lex.count_;
  }
  for (auto& [first, phrases] : lex.by_first_)
    std::stable_sort(phrases.begin(), phrases.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
  if (lex.count_ == 0) throw PreconditionError("phrase lexicon is empty");
  return lex;
}

PhraseLexicon PhraseLexicon::from_file(const std::filesystem::path& path) { return parse(detail::read_file(path)); }

PhraseLexicon PhraseLexicon::negative_keywords() { return parse(builtin("negative_keywords.txt")); }

std::vector<std::string> PhraseLexicon::matches(std::string_view text) const {
  std::vector<std::string> out;
  for (const auto& run : token_runs(text)) {
    std::size_t i = 0;
    while (i < run.size()) {
      std::size_t used = 0;
      if (auto it = by_first_.find(run[i]); it != by_first_.end()) {
        for (const auto& phrase : it->second) {
          if (i + phrase.size() > run.size()) continue;
          if (std::equal(phrase.begin(), phrase.end(), run.begin() + static_cast<std::ptrdiff_t>(i))) {
            used = phrase.size();
            std::string joined;
            for (const auto& p : phrase) joined += (joined.empty() ? "" : " ") + p;
            out.push_back(std::move(joined));
            break;
          }
        }
      }
      i += used ? used : 1;
    }
  }
  return out;
}

std::size_t PhraseLexicon::count(std::string_view text) const { return matches(text).size(); }

ValenceLexicon ValenceLexicon::parse(std::string_view text) {
  ValenceLexicon lex;
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto sep = t.find_first_of(" \t");
    if (sep == std::string_view::npos)
      throw AnalysisError(AnalysisError::Kind::malformed_input, "valence line " + std::to_string(line_no) + ": no value");
    auto word = detail::to_lower(t.substr(0, sep));
    auto num = detail::trim(t.substr(sep));
    if (!num.empty() && num.front() == '+') num.remove_prefix(1);
    double v = 0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
    if (ec != std::errc{} || ptr != num.data() + num.size() || !(v >= -1.0 && v <= 1.0))
      throw AnalysisError(AnalysisError::Kind::malformed_input,
                          "valence line " + std::to_string(line_no) + ": value must be a number in [-1, 1]");
    lex.values_[word] = v;
  }
  return lex;
}

ValenceLexicon ValenceLexicon::from_file(const std::filesystem::path& path) { return parse(detail::read_file(path)); }

ValenceLexicon ValenceLexicon::bundled() { return parse(builtin("valence.txt")); }

const double* ValenceLexicon::find(std::string_view word) const {
  auto it = values_.find(word);
  return it == values_.end() ? nullptr : &it->second;
}

double sentiment_score(std::string_view text, const ValenceLexicon& lexicon) {
  double sum = 0;
  std::size_t hits = 0;
  for (const auto& tok : tokenize(text)) {
    if (const double* v = lexicon.find(detail::to_lower(tok))) {
      sum += *v;
      ++hits;
    }
  }
  return hits == 0 ? 0.0 : std::clamp(sum / static_cast<double>(hits), -1.0, 1.0);
}

}  // namespace revsim::analysis
