#include "revsim/analysis/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

#include "io.hpp"

namespace revsim::analysis {

namespace {

bool word_byte(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || u >= 0x80;
}

bool letter_byte(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalpha(u) || u >= 0x80;
}

bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

constexpr std::array<std::string_view, 28> kAbbreviations = {
    "al.",    "e.g.",  "i.e.",   "fig.", "figs.", "eq.",   "eqs.",  "sec.", "secs.", "tab.",
    "cf.",    "vs.",   "dr.",    "mr.",  "mrs.",  "ms.",   "prof.", "no.",  "approx.", "resp.",
    "ref.",   "refs.", "vol.",   "pp.",  "ch.",   "app.",  "thm.",  "def.",
};

bool ends_with_abbreviation(std::string_view text, std::size_t dot) {
  std::size_t start = dot;
  while (start > 0 && !is_space(text[start - 1]) && text[start - 1] != '(') --start;
  auto word = detail::to_lower(text.substr(start, dot - start + 1));
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

// True when the terminator at `i` closes a sentence.
bool sentence_break(std::string_view text, std::size_t i) {
  char c = text[i];
  if (c != '.' && c != '?' && c != '!') return false;
  std::size_t j = i + 1;
  while (j < text.size() && (text[j] == ')' || text[j] == '"' || text[j] == '\'' || text[j] == ']')) ++j;
  if (j >= text.size() || !is_space(text[j])) return false;
  while (j < text.size() && is_space(text[j])) ++j;
  while (j < text.size() && (text[j] == '(' || text[j] == '"' || text[j] == '\'' || text[j] == '[')) ++j;
  if (j >= text.size() || !is_upper(text[j])) return false;
  return !(c == '.' && ends_with_abbreviation(text, i));
}

std::vector<std::string_view> split_paragraphs(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = std::string_view::npos, end = 0, pos = 0;
  for (auto line : detail::split_lines(text)) {
    std::size_t at = static_cast<std::size_t>(line.data() - text.data());
    pos = at + line.size();
    if (detail::trim(line).empty()) {
      if (start != std::string_view::npos) out.push_back(text.substr(start, end - start));
      start = std::string_view::npos;
      continue;
    }
    if (start == std::string_view::npos) start = at;
    end = pos;
  }
  if (start != std::string_view::npos) out.push_back(text.substr(start, end - start));
  return out;
}

bool is_vowel_letter(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y'; }
bool is_plain_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

// Syllable estimate for one run of lowercase ASCII letters.
int syllables_of_part(const std::string& w) {
  const std::size_t n = w.size();
  std::vector<bool> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    char c = w[i];
    bool vowel = is_vowel_letter(c);
    if (c == 'y' && i + 1 < n && is_plain_vowel(w[i + 1]) && (i == 0 || is_plain_vowel(w[i - 1]))) vowel = false;
    if (c == 'u' && i > 0 && w[i - 1] == 'q') vowel = false;
    v[i] = vowel;
  }
  auto vowel_at = [&](std::size_t i) { return i < n && v[i]; };
  auto consonant_at = [&](std::size_t i) { return i < n && !v[i]; };
  auto ends = [&](std::string_view s) { return w.size() >= s.size() && std::string_view(w).substr(n - s.size()) == s; };

  int groups = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (v[i] && (i == 0 || !v[i - 1])) ++groups;
  if (groups == 0) return 1;
  int count = groups;

  // Vowel pairs that are usually read as two syllables.
  auto before_in = [&](std::size_t i, std::string_view set) { return i > 0 && set.find(w[i - 1]) != std::string_view::npos; };
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::string_view rest = std::string_view(w).substr(i);
    if (rest.starts_with("iou")) {
      if (!before_in(i, "ctxg")) ++count;
      i += 2;
      continue;
    }
    if (rest.starts_with("ia") && !before_in(i, "cts")) ++count;
    else if (rest.starts_with("io") && !before_in(i, "tscxglnh")) ++count;
    else if (rest.starts_with("eo") && !(i > 0 && std::string_view(w).substr(i - 1).starts_with("peo")) && !before_in(i, "g"))
      ++count;
    else if (rest.starts_with("ua") && !before_in(i, "qg")) ++count;
    else if (rest.starts_with("uen") && !before_in(i, "qg")) ++count;
    else if (rest.starts_with("iet")) ++count;
    else if (rest.starts_with("ium")) ++count;
    else if (rest.starts_with("ien") && !before_in(i, "t") &&
             !(before_in(i, "c") && !(i > 1 && w[i - 2] == 's')))
      ++count;
    else if (rest.starts_with("creat")) ++count;
  }
  if (groups > 1 && (ends("ea") || ends("eas"))) ++count;
  if (ends("ier") || ends("iers")) ++count;
  if (n > 4 && ends("ing") && vowel_at(n - 4)) ++count;

  // Silent endings.
  if (groups > 1 && n >= 2 && w[n - 1] == 'e' && consonant_at(n - 2)) {
    bool syllabic_le = w[n - 2] == 'l' && n >= 3 && consonant_at(n - 3);
    if (!syllabic_le) --count;
  }
  if (groups > 1 && n >= 3 && ends("ed") && consonant_at(n - 3) && w[n - 3] != 't' && w[n - 3] != 'd') {
    bool syllabic_led = w[n - 3] == 'l' && n >= 4 && consonant_at(n - 4) && w[n - 4] != 'l';
    if (!syllabic_led) --count;
  }
  if (groups > 1 && n >= 4 && ends("es") && consonant_at(n - 3)) {
    char c = w[n - 3];
    bool sibilant = c == 's' || c == 'x' || c == 'z' || c == 'g' || c == 'c' ||
                    (c == 'h' && (w[n - 4] == 'c' || w[n - 4] == 's'));
    bool syllabic_les = c == 'l' && consonant_at(n - 4);
    if (!sibilant && !syllabic_les) --count;
  }
  return std::max(1, count);
}

}  // namespace

SegmentedDoc::SegmentedDoc(std::vector<Paragraph> paragraphs) {
  for (auto& p : paragraphs) {
    p.erase(std::remove_if(p.begin(), p.end(), [](const Sentence& s) { return s.empty(); }), p.end());
    if (p.empty()) continue;
    for (const auto& s : p) {
      ++sentence_count_;
      token_count_ += s.size();
      word_count_ += static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](const std::string& t) { return is_word(t); }));
    }
    paragraphs_.push_back(std::move(p));
  }
}

std::vector<Sentence> SegmentedDoc::sentences() const {
  std::vector<Sentence> out;
  for (const auto& p : paragraphs_) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::vector<std::string> SegmentedDoc::tokens() const {
  std::vector<std::string> out;
  out.reserve(token_count_);
  for (const auto& p : paragraphs_)
    for (const auto& s : p) out.insert(out.end(), s.begin(), s.end());
  return out;
}

std::vector<std::string> SegmentedDoc::lowered_tokens() const {
  auto out = tokens();
  for (auto& t : out) t = detail::to_lower(t);
  return out;
}

std::vector<std::string> SegmentedDoc::words() const {
  std::vector<std::string> out;
  out.reserve(word_count_);
  for (const auto& p : paragraphs_)
    for (const auto& s : p)
      for (const auto& t : s)
        if (is_word(t)) out.push_back(t);
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (word_byte(c)) {
      cur += c;
      continue;
    }
    bool joiner = c == '-' || c == '\'' ||
                  ((c == '.' || c == ',') && !cur.empty() && std::isdigit(static_cast<unsigned char>(cur.back())) &&
                   i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])));
    if (joiner && !cur.empty() && i + 1 < text.size() && word_byte(text[i + 1])) {
      cur += c;
      continue;
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool is_word(std::string_view token) { return std::any_of(token.begin(), token.end(), letter_byte); }

SegmentedDoc segment(std::string_view text) {
  std::vector<Paragraph> paragraphs;
  for (auto para : split_paragraphs(text)) {
    Paragraph p;
    std::size_t start = 0;
    for (std::size_t i = 0; i < para.size(); ++i) {
      if (!sentence_break(para, i)) continue;
      p.push_back(tokenize(para.substr(start, i + 1 - start)));
      start = i + 1;
    }
    p.push_back(tokenize(para.substr(start)));
    paragraphs.push_back(std::move(p));
  }
  return SegmentedDoc(std::move(paragraphs));
}

double ngram_diversity(const std::vector<std::string>& tokens, std::size_t n) {
  if (n == 0) throw PreconditionError("n-gram order must be positive");
  if (tokens.size() < n)
    throw AnalysisError(AnalysisError::Kind::too_short, "TooShort(" + std::to_string(n) + ")");
  const std::size_t total = tokens.size() - n + 1;
  std::unordered_set<std::string> seen;
  seen.reserve(total);
  std::string key;
  for (std::size_t i = 0; i < total; ++i) {
    key.clear();
    for (std::size_t k = 0; k < n; ++k) {
      key += tokens[i + k];
      key += '\x1f';
    }
    seen.insert(key);
  }
  return static_cast<double>(seen.size()) / static_cast<double>(total);
}

int syllable_count(std::string_view word) {
  if (!std::any_of(word.begin(), word.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }))
    throw AnalysisError(AnalysisError::Kind::non_alphabetic, "NonAlphabetic(" + std::string(word) + ")");
  // Hyphenated compounds are the sum of their parts.
  int total = 0;
  std::string part;
  auto flush = [&] {
    if (!part.empty()) total += syllables_of_part(part);
    part.clear();
  };
  for (char c : word) {
    if (std::isalpha(static_cast<unsigned char>(c))) part += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else if (c == '-') flush();
  }
  flush();
  return std::max(1, total);
}

double fkg(const SegmentedDoc& doc) {
  if (doc.sentence_count() == 0 || doc.word_count() == 0)
    throw AnalysisError(AnalysisError::Kind::empty_document, "EmptyDocument");
  std::size_t syllables = 0;
  std::size_t words = 0;
  for (const auto& w : doc.words()) {
    // Words made only of non-ASCII letters fall outside the heuristic; count one.
    bool ascii = std::any_of(w.begin(), w.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; });
    syllables += ascii ? static_cast<std::size_t>(syllable_count(w)) : 1;
    ++words;
  }
  const double wps = static_cast<double>(words) / static_cast<double>(doc.sentence_count());
  const double spw = static_cast<double>(syllables) / static_cast<double>(words);
  return kFkgSentenceWeight * wps + kFkgSyllableWeight * spw + kFkgOffset;
}

}  // namespace revsim::analysis
