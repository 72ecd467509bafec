#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "revsim/docmodel.hpp"

namespace revsim {

/// What ingestion removed, so corpus statistics can be audited against the
/// rules applied.
struct IngestReport {
  std::size_t comments_removed = 0;
  std::size_t math_spans_removed = 0;
  std::size_t citations_replaced = 0;
  std::map<std::string, std::size_t> environments_removed;
  std::vector<std::string> sections_dropped;
  bool appendix_dropped = false;
  std::vector<std::string> rules;
};

struct IngestOptions {
  std::string id;
  std::vector<std::string> keywords;
  Authorship authorship = Authorship::human;
  // Used when the source has no \title.
  std::string fallback_title;
  // Optional BibTeX database; entries become unverified references.
  std::optional<std::string> bibtex;
};

struct IngestResult {
  PaperDoc doc;
  IngestReport report;
};

// Token substituted for every citation command during ingestion.
inline constexpr std::string_view kCitationToken = "[CIT]";
// Token left behind by verify_citations for removed references.
inline constexpr std::string_view kRemovedCitationToken = "[CIT-REMOVED]";

/// Converts a LaTeX manuscript into a prose-only PaperDoc: comments, math and
/// float/tabular environments are removed, citation commands become [CIT],
/// formatting commands are unwrapped, and anything after \appendix is dropped.
IngestResult ingest_latex(std::string_view source, const IngestOptions& options);

/// Inline-level stripping for a single paragraph that may still carry LaTeX
/// markup (drafted documents keep their \cite commands). Whitespace is
/// collapsed; the result has no newlines.
std::string strip_latex(std::string_view paragraph, IngestReport* report = nullptr);

struct CitationUse {
  std::size_t begin = 0;  // byte offset of the backslash
  std::size_t end = 0;    // one past the closing brace
  std::vector<std::string> keys;
};

// Every \cite-family command in `text` with its comma-separated keys.
std::vector<CitationUse> find_citations(std::string_view text);

std::vector<RefEntry> parse_bibtex(std::string_view bib);

}  // namespace revsim
