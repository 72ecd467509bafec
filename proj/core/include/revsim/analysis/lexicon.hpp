#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "revsim/analysis/error.hpp"

namespace revsim::analysis {

/// Multi-word phrase list matched longest-first over lowercased tokens.
class PhraseLexicon {
 public:
  // One phrase per line; blank lines and lines starting with '#' are skipped.
  static PhraseLexicon parse(std::string_view text);
  static PhraseLexicon from_file(const std::filesystem::path& path);
  // The bundled negative-keyword list.
  static PhraseLexicon negative_keywords();

  std::size_t size() const { return count_; }

  /// Non-overlapping matches. A token used by a longer phrase is not counted
  /// again by a shorter one, and phrases never span `.`, `?`, `!`, `;` or a
  /// paragraph break.
  std::size_t count(std::string_view text) const;
  // Matched phrases in order, for reports.
  std::vector<std::string> matches(std::string_view text) const;

 private:
  // First token -> phrases (as token lists), longest first.
  std::map<std::string, std::vector<std::vector<std::string>>, std::less<>> by_first_;
  std::size_t count_ = 0;
};

/// Word -> valence in [-1, 1].
class ValenceLexicon {
 public:
  // Lines of `word<TAB or space>valence`; '#' starts a comment line.
  static ValenceLexicon parse(std::string_view text);
  static ValenceLexicon from_file(const std::filesystem::path& path);
  static ValenceLexicon bundled();

  std::size_t size() const { return values_.size(); }
  const double* find(std::string_view word) const;

 private:
  std::map<std::string, double, std::less<>> values_;
};

/// Mean valence of the lexicon words in `text`; 0 when none occur.
double sentiment_score(std::string_view text, const ValenceLexicon& lexicon);

inline std::size_t count_negative_keywords(std::string_view text, const PhraseLexicon& lexicon) {
  return lexicon.count(text);
}

}  // namespace revsim::analysis
