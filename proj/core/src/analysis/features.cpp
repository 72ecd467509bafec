#include "revsim/analysis/features.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "io.hpp"
#include "revsim/latex.hpp"
#include "revsim/research_engine.hpp"
#include "revsim/review_engine.hpp"

namespace revsim::analysis {

namespace {

std::string drop_citation_tokens(std::string text) {
  for (std::string_view token : {kRemovedCitationToken, kCitationToken}) {
    for (auto at = text.find(token); at != std::string::npos; at = text.find(token, at)) text.erase(at, token.size());
  }
  return text;
}

std::string prose_of(std::span<const Section> sections) {
  std::string out;
  for (const auto& s : sections) {
    for (const auto& p : s.paragraphs) {
      auto plain = drop_citation_tokens(strip_latex(p));
      if (detail::trim(plain).empty()) continue;
      if (!out.empty()) out += "\n\n";
      out += plain;
    }
  }
  return out;
}

std::optional<double> parse_optional_number(std::string_view cell, std::string_view column, std::size_t line) {
  auto t = detail::trim(cell);
  if (t.empty() || t == "NA") return std::nullopt;
  std::string s(t);
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v))
    throw AnalysisError(AnalysisError::Kind::malformed_input,
                        "row " + std::to_string(line) + ": column " + std::string(column) + " is not a number: " + s);
  return v;
}

double required_number(std::string_view cell, std::string_view column, std::size_t line) {
  auto v = parse_optional_number(cell, column, line);
  if (!v)
    throw AnalysisError(AnalysisError::Kind::malformed_input,
                        "row " + std::to_string(line) + ": column " + std::string(column) + " is empty");
  return *v;
}

std::size_t required_count(std::string_view cell, std::string_view column, std::size_t line) {
  double v = required_number(cell, column, line);
  if (v < 0 || v != std::floor(v))
    throw AnalysisError(AnalysisError::Kind::malformed_input,
                        "row " + std::to_string(line) + ": column " + std::string(column) + " must be a count");
  return static_cast<std::size_t>(v);
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

}  // namespace

const std::vector<std::string>& FeatureVector::names() {
  static const std::vector<std::string> n{
      "paper_length_words", "avg_sentence_length", "avg_paragraph_length", "sentences_per_paragraph",
      "diversity_1",        "diversity_2",         "diversity_3",          "fkg",
      "mean_dep_distance",  "subclause_ratio",     "neg_keyword_count",    "sentiment",
  };
  return n;
}

std::optional<double> FeatureVector::get(std::string_view name) const {
  if (name == "paper_length_words") return static_cast<double>(paper_length_words);
  if (name == "avg_sentence_length") return avg_sentence_length;
  if (name == "avg_paragraph_length") return avg_paragraph_length;
  if (name == "sentences_per_paragraph") return sentences_per_paragraph;
  if (name == "diversity_1") return diversity_1;
  if (name == "diversity_2") return diversity_2;
  if (name == "diversity_3") return diversity_3;
  if (name == "fkg") return fkg;
  if (name == "mean_dep_distance") return mean_dep_distance;
  if (name == "subclause_ratio") return subclause_ratio;
  if (name == "neg_keyword_count") return static_cast<double>(neg_keyword_count);
  if (name == "sentiment") return sentiment;
  throw PreconditionError("unknown feature " + std::string(name));
}

std::string prose_text(const PaperDoc& doc) { return prose_of(doc.sections); }

std::string abstract_text(const PaperDoc& doc) {
  if (const Section* s = doc.find_section("Abstract")) return prose_of(std::span<const Section>(s, 1));
  return prose_text(doc);
}

FeatureExtractor::FeatureExtractor(PhraseLexicon negative, ValenceLexicon valence)
    : negative_(std::move(negative)), valence_(std::move(valence)) {}

FeatureExtractor FeatureExtractor::with_defaults() {
  return FeatureExtractor(PhraseLexicon::negative_keywords(), ValenceLexicon::bundled());
}

FeatureVector FeatureExtractor::extract(const PaperDoc& doc, const std::vector<ParsedSentence>* parses) const {
  const auto seg = segment(prose_text(doc));
  if (seg.word_count() == 0) throw AnalysisError(AnalysisError::Kind::empty_document, "EmptyDocument(" + doc.id + ")");

  FeatureVector f;
  const auto words = static_cast<double>(seg.word_count());
  f.paper_length_words = seg.word_count();
  f.avg_sentence_length = words / static_cast<double>(seg.sentence_count());
  f.avg_paragraph_length = words / static_cast<double>(seg.paragraph_count());
  f.sentences_per_paragraph =
      static_cast<double>(seg.sentence_count()) / static_cast<double>(seg.paragraph_count());
  const auto tokens = seg.lowered_tokens();
  f.diversity_1 = ngram_diversity(tokens, 1);
  f.diversity_2 = ngram_diversity(tokens, 2);
  f.diversity_3 = ngram_diversity(tokens, 3);
  f.fkg = analysis::fkg(seg);

  std::vector<ParsedSentence> parsed;
  if (parses) {
    parsed = *parses;
  } else if (parser_) {
    parsed = parser_->parse(seg.sentences());
  }
  if (!parsed.empty()) {
    f.mean_dep_distance = mean_dep_distance(parsed);
    f.subclause_ratio = subclause_ratio(parsed);
  }

  const auto abstract = abstract_text(doc);
  f.neg_keyword_count = negative_.count(abstract);
  f.sentiment = sentiment_score(abstract, valence_);
  return f;
}

std::string format_number(double v) {
  char buf[64];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = any = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
      }
      record.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw AnalysisError(AnalysisError::Kind::malformed_input, "unterminated quoted CSV field");
  if (any || !field.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  if (records.empty()) throw AnalysisError(AnalysisError::Kind::malformed_input, "CSV input has no header");
  CsvTable t;
  t.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size())
      throw AnalysisError(AnalysisError::Kind::malformed_input,
                          "CSV row " + std::to_string(r + 1) + " has " + std::to_string(records[r].size()) +
                              " fields, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

std::string write_csv(const CsvTable& table) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(cells[i]);
    }
    out += '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  return out;
}

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

std::vector<std::string> feature_csv_header() {
  std::vector<std::string> h{"paper_id", "authorship", "score"};
  const auto& n = FeatureVector::names();
  h.insert(h.end(), n.begin(), n.end());
  return h;
}

std::string write_feature_csv(std::span<const FeatureRow> rows) {
  CsvTable t{feature_csv_header(), {}};
  for (const auto& r : rows) {
    std::vector<std::string> cells{r.paper_id, std::string(to_string(r.authorship)), optional_cell(r.score)};
    for (const auto& name : FeatureVector::names()) cells.push_back(optional_cell(r.features.get(name)));
    t.rows.push_back(std::move(cells));
  }
  return write_csv(t);
}

std::vector<FeatureRow> read_feature_csv(std::string_view text) {
  auto t = parse_csv(text);
  if (t.header != feature_csv_header())
    throw AnalysisError(AnalysisError::Kind::malformed_input, "feature CSV header does not match the expected columns");
  std::vector<FeatureRow> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& c = t.rows[r];
    const std::size_t line = r + 2;
    FeatureRow row;
    row.paper_id = c[0];
    try {
      row.authorship = authorship_from_string(c[1]);
    } catch (const Error& e) {
      throw AnalysisError(AnalysisError::Kind::malformed_input, "row " + std::to_string(line) + ": " + e.what());
    }
    row.score = parse_optional_number(c[2], "score", line);
    auto& f = row.features;
    f.paper_length_words = required_count(c[3], "paper_length_words", line);
    f.avg_sentence_length = required_number(c[4], "avg_sentence_length", line);
    f.avg_paragraph_length = required_number(c[5], "avg_paragraph_length", line);
    f.sentences_per_paragraph = required_number(c[6], "sentences_per_paragraph", line);
    f.diversity_1 = required_number(c[7], "diversity_1", line);
    f.diversity_2 = required_number(c[8], "diversity_2", line);
    f.diversity_3 = required_number(c[9], "diversity_3", line);
    f.fkg = required_number(c[10], "fkg", line);
    f.mean_dep_distance = parse_optional_number(c[11], "mean_dep_distance", line);
    f.subclause_ratio = parse_optional_number(c[12], "subclause_ratio", line);
    f.neg_keyword_count = required_count(c[13], "neg_keyword_count", line);
    f.sentiment = required_number(c[14], "sentiment", line);
    out.push_back(std::move(row));
  }
  return out;
}

void to_json(nlohmann::json& j, const FeatureVector& f) {
  j = nlohmann::json::object();
  for (const auto& name : FeatureVector::names()) {
    auto v = f.get(name);
    if (!v) j[name] = nullptr;
    else if (name == "paper_length_words" || name == "neg_keyword_count") j[name] = static_cast<std::size_t>(*v);
    else j[name] = *v;
  }
}

void from_json(const nlohmann::json& j, FeatureVector& f) {
  auto opt = [&](const char* k) -> std::optional<double> {
    if (!j.contains(k) || j.at(k).is_null()) return std::nullopt;
    return j.at(k).get<double>();
  };
  f.paper_length_words = j.at("paper_length_words").get<std::size_t>();
  f.avg_sentence_length = j.at("avg_sentence_length").get<double>();
  f.avg_paragraph_length = j.at("avg_paragraph_length").get<double>();
  f.sentences_per_paragraph = j.at("sentences_per_paragraph").get<double>();
  f.diversity_1 = j.at("diversity_1").get<double>();
  f.diversity_2 = j.at("diversity_2").get<double>();
  f.diversity_3 = j.at("diversity_3").get<double>();
  f.fkg = j.at("fkg").get<double>();
  f.mean_dep_distance = opt("mean_dep_distance");
  f.subclause_ratio = opt("subclause_ratio");
  f.neg_keyword_count = j.at("neg_keyword_count").get<std::size_t>();
  f.sentiment = j.at("sentiment").get<double>();
}

void to_json(nlohmann::json& j, const FeatureRow& r) {
  j = nlohmann::json{{"paper_id", r.paper_id}, {"authorship", to_string(r.authorship)}};
  j["score"] = r.score ? nlohmann::json(*r.score) : nlohmann::json(nullptr);
  j["features"] = r.features;
}

void from_json(const nlohmann::json& j, FeatureRow& r) {
  r.paper_id = j.at("paper_id").get<std::string>();
  r.authorship = authorship_from_string(j.at("authorship").get<std::string>());
  r.score = j.contains("score") && !j.at("score").is_null() ? std::optional<double>(j.at("score").get<double>())
                                                            : std::nullopt;
  r.features = j.at("features").get<FeatureVector>();
}

std::string write_feature_ndjson(std::span<const FeatureRow> rows) {
  std::string out;
  for (const auto& r : rows) {
    out += nlohmann::json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<FeatureRow> read_feature_ndjson(std::string_view text) {
  std::vector<FeatureRow> out;
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<FeatureRow>());
    } catch (const std::exception& e) {
      throw AnalysisError(AnalysisError::Kind::malformed_input, "feature line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<CorrelationRow> correlate_table(const CsvTable& table, std::string_view target) {
  auto target_col = table.column(target);
  if (!target_col)
    throw AnalysisError(AnalysisError::Kind::malformed_input, "table has no column named " + std::string(target));

  std::vector<CorrelationRow> out;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == *target_col) continue;
    std::vector<double> xs, ys;
    bool numeric = true;
    for (std::size_t r = 0; r < table.rows.size() && numeric; ++r) {
      try {
        auto x = parse_optional_number(table.rows[r][c], table.header[c], r + 2);
        auto y = parse_optional_number(table.rows[r][*target_col], target, r + 2);
        if (x && y) {
          xs.push_back(*x);
          ys.push_back(*y);
        }
      } catch (const AnalysisError&) {
        numeric = false;
      }
    }
    // Identifier and label columns are skipped rather than reported.
    if (!numeric) continue;
    CorrelationRow row{table.header[c], std::nullopt};
    try {
      row.result = pearson(xs, ys);
    } catch (const AnalysisError& e) {
      if (e.kind() != AnalysisError::Kind::degenerate_variance && e.kind() != AnalysisError::Kind::too_few_points) throw;
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::string write_correlation_csv(std::span<const CorrelationRow> rows) {
  CsvTable t{{"feature", "r", "p_value", "n"}, {}};
  for (const auto& r : rows) {
    if (r.result)
      t.rows.push_back({r.feature, format_number(r.result->statistic), format_number(r.result->p_value),
                        std::to_string(r.result->n)});
    else
      t.rows.push_back({r.feature, "NA", "NA", "0"});
  }
  return write_csv(t);
}

std::vector<GroupSummary> summarize_by_authorship(std::span<const FeatureRow> rows, double threshold) {
  std::vector<GroupSummary> out;
  auto build = [&](std::string name, auto pred) {
    GroupSummary g{std::move(name), 0, std::nullopt, std::nullopt, std::nullopt};
    std::vector<double> scores;
    for (const auto& r : rows) {
      if (!pred(r)) continue;
      ++g.n;
      if (r.score) scores.push_back(*r.score);
    }
    if (!scores.empty()) {
      auto s = summary_stats(scores);
      g.avg_score = s.mean;
      std::size_t accepted = 0;
      for (double x : scores) accepted += x >= threshold;
      g.acc_rate = static_cast<double>(accepted) / static_cast<double>(scores.size());
      g.scores = s;
    }
    out.push_back(std::move(g));
  };
  build("human", [](const FeatureRow& r) { return r.authorship == Authorship::human; });
  build("llm", [](const FeatureRow& r) { return r.authorship == Authorship::llm; });
  build("all", [](const FeatureRow&) { return true; });
  return out;
}

std::string write_group_summary_csv(std::span<const GroupSummary> rows) {
  CsvTable t{{"group", "n", "Avg Score", "Acc Rate", "min", "q1", "median", "q3", "max"}, {}};
  for (const auto& g : rows) {
    std::vector<std::string> cells{g.group, std::to_string(g.n), optional_cell(g.avg_score), optional_cell(g.acc_rate)};
    for (auto v : {&SummaryStats::min, &SummaryStats::q1, &SummaryStats::median, &SummaryStats::q3, &SummaryStats::max})
      cells.push_back(g.scores ? format_number((*g.scores).*v) : "");
    t.rows.push_back(std::move(cells));
  }
  return write_csv(t);
}

std::vector<PolishShiftRow> polish_shift_report(const PaperDoc& base, std::span<const double> ratios,
                                                const research::ResearchEngine& engine, std::uint64_t seed,
                                                const FeatureExtractor& extractor) {
  for (double r : ratios)
    if (!(r >= 0.0 && r <= 1.0)) throw PreconditionError("polish ratios must lie within [0, 1]");
  std::vector<PolishShiftRow> out;
  for (double r : ratios) {
    auto doc = r == 0.0 ? base : engine.polish(base, research::PolishSpec{r, seed});
    out.push_back({r, extractor.extract(doc)});
  }
  return out;
}

std::string write_polish_shift_csv(std::span<const PolishShiftRow> rows) {
  CsvTable t{{"ratio"}, {}};
  for (const auto& n : FeatureVector::names()) t.header.push_back(n);
  for (const auto& r : rows) {
    std::vector<std::string> cells{format_number(r.ratio)};
    for (const auto& n : FeatureVector::names()) cells.push_back(optional_cell(r.features.get(n)));
    t.rows.push_back(std::move(cells));
  }
  return write_csv(t);
}

std::string write_polish_shift_long_csv(std::span<const PolishShiftRow> rows) {
  CsvTable t{{"ratio", "feature", "value"}, {}};
  for (const auto& r : rows)
    for (const auto& n : FeatureVector::names())
      if (auto v = r.features.get(n)) t.rows.push_back({format_number(r.ratio), n, format_number(*v)});
  return write_csv(t);
}

}  // namespace revsim::analysis
