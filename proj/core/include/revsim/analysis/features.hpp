#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "revsim/analysis/lexicon.hpp"
#include "revsim/analysis/stats.hpp"
#include "revsim/analysis/syntax.hpp"
#include "revsim/analysis/text.hpp"
#include "revsim/docmodel.hpp"

namespace revsim::research {
class ResearchEngine;
}

namespace revsim::analysis {

struct FeatureVector {
  std::size_t paper_length_words = 0;
  double avg_sentence_length = 0;
  double avg_paragraph_length = 0;
  // Sentences per paragraph, kept next to avg_paragraph_length.
  double sentences_per_paragraph = 0;
  double diversity_1 = 0;
  double diversity_2 = 0;
  double diversity_3 = 0;
  double fkg = 0;
  std::optional<double> mean_dep_distance;
  std::optional<double> subclause_ratio;
  std::size_t neg_keyword_count = 0;
  double sentiment = 0;

  bool operator==(const FeatureVector&) const = default;

  // Column names in table order.
  static const std::vector<std::string>& names();
  // Value of a named column; nullopt for an absent optional feature.
  std::optional<double> get(std::string_view name) const;
};

struct FeatureRow {
  std::string paper_id;
  Authorship authorship = Authorship::human;
  std::optional<double> score;
  FeatureVector features;

  bool operator==(const FeatureRow&) const = default;
};

// Prose of a document as the feature code sees it: LaTeX stripped, citation
// tokens dropped, paragraphs separated by blank lines.
std::string prose_text(const PaperDoc& doc);
// Prose of the Abstract section, or of the whole document when it has none.
std::string abstract_text(const PaperDoc& doc);

class FeatureExtractor {
 public:
  FeatureExtractor(PhraseLexicon negative, ValenceLexicon valence);
  // Bundled lexicons.
  static FeatureExtractor with_defaults();

  // Dependency features come from `parses` when given, else from the parser
  // when one is set, else stay absent.
  void set_parser(SentenceParser* parser) { parser_ = parser; }

  FeatureVector extract(const PaperDoc& doc, const std::vector<ParsedSentence>* parses = nullptr) const;

  const PhraseLexicon& negative() const { return negative_; }
  const ValenceLexicon& valence() const { return valence_; }

 private:
  PhraseLexicon negative_;
  ValenceLexicon valence_;
  SentenceParser* parser_ = nullptr;
};

// CSV header: paper_id, authorship, score, then FeatureVector::names().
std::vector<std::string> feature_csv_header();
std::string write_feature_csv(std::span<const FeatureRow> rows);
std::vector<FeatureRow> read_feature_csv(std::string_view text);
std::string write_feature_ndjson(std::span<const FeatureRow> rows);
std::vector<FeatureRow> read_feature_ndjson(std::string_view text);

void to_json(nlohmann::json& j, const FeatureVector& f);
void from_json(const nlohmann::json& j, FeatureVector& f);
void to_json(nlohmann::json& j, const FeatureRow& r);
void from_json(const nlohmann::json& j, FeatureRow& r);

/// Minimal RFC 4180 table.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
std::string write_csv(const CsvTable& table);
std::string csv_escape(std::string_view field);
// Shortest text that reads back to the same double.
std::string format_number(double v);

struct CorrelationRow {
  std::string feature;
  std::optional<StatResult> result;  // absent when the column has no variance
};

/// Pearson correlation of every numeric column against `target`, with rows
/// missing either value skipped pairwise.
std::vector<CorrelationRow> correlate_table(const CsvTable& table, std::string_view target = "score");
std::string write_correlation_csv(std::span<const CorrelationRow> rows);

struct GroupSummary {
  std::string group;
  std::size_t n = 0;
  std::optional<double> avg_score;
  std::optional<double> acc_rate;  // share with score >= 6
  std::optional<SummaryStats> scores;
};

// Per-authorship score summaries, human first, then an "all" row.
std::vector<GroupSummary> summarize_by_authorship(std::span<const FeatureRow> rows, double threshold = 6.0);
std::string write_group_summary_csv(std::span<const GroupSummary> rows);

struct PolishShiftRow {
  double ratio = 0;
  FeatureVector features;
};

inline const std::vector<double>& default_polish_ratios() {
  static const std::vector<double> r{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  return r;
}

/// Polishes `base` at each ratio with the same seed and extracts features.
std::vector<PolishShiftRow> polish_shift_report(const PaperDoc& base, std::span<const double> ratios,
                                                const research::ResearchEngine& engine, std::uint64_t seed,
                                                const FeatureExtractor& extractor);
// Wide table, one row per ratio.
std::string write_polish_shift_csv(std::span<const PolishShiftRow> rows);
// Long format (ratio, feature, value) for plotting.
std::string write_polish_shift_long_csv(std::span<const PolishShiftRow> rows);

}  // namespace revsim::analysis
