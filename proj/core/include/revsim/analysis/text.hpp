#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "revsim/analysis/error.hpp"

namespace revsim::analysis {

using Sentence = std::vector<std::string>;
using Paragraph = std::vector<Sentence>;

/// Paragraphs of sentences of tokens. Tokens keep their original case and
/// exclude punctuation; internal hyphens and apostrophes stay inside a token.
class SegmentedDoc {
 public:
  SegmentedDoc() = default;
  explicit SegmentedDoc(std::vector<Paragraph> paragraphs);

  const std::vector<Paragraph>& paragraphs() const { return paragraphs_; }
  std::size_t paragraph_count() const { return paragraphs_.size(); }
  std::size_t sentence_count() const { return sentence_count_; }
  std::size_t token_count() const { return token_count_; }
  // Tokens that contain at least one letter.
  std::size_t word_count() const { return word_count_; }

  std::vector<Sentence> sentences() const;
  // Every token in reading order.
  std::vector<std::string> tokens() const;
  std::vector<std::string> lowered_tokens() const;
  std::vector<std::string> words() const;

 private:
  std::vector<Paragraph> paragraphs_;
  std::size_t sentence_count_ = 0;
  std::size_t token_count_ = 0;
  std::size_t word_count_ = 0;
};

/// Paragraphs split on blank lines; sentences end at `.`, `?` or `!` followed
/// by whitespace and a capital letter, except after a known abbreviation.
/// Sentences without tokens are dropped.
SegmentedDoc segment(std::string_view text);

// Word tokens of a single stretch of text, punctuation excluded.
std::vector<std::string> tokenize(std::string_view text);

bool is_word(std::string_view token);

/// Distinct n-grams over total n-grams (len - n + 1).
double ngram_diversity(const std::vector<std::string>& tokens, std::size_t n);

/// Vowel-group heuristic with corrections for common English spellings
/// (silent final e, -ed/-es endings, vowel pairs read as two syllables).
int syllable_count(std::string_view word);

/// Flesch-Kincaid grade level over the word tokens of a document.
double fkg(const SegmentedDoc& doc);

inline constexpr double kFkgSentenceWeight = 0.39;
inline constexpr double kFkgSyllableWeight = 11.8;
inline constexpr double kFkgOffset = -15.59;

}  // namespace revsim::analysis
