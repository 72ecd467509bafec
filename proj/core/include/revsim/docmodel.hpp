#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "revsim/error.hpp"

namespace revsim {

enum class Authorship { human, llm };

std::string_view to_string(Authorship a);
Authorship authorship_from_string(std::string_view s);

struct Section {
  std::string name;
  std::vector<std::string> paragraphs;

  bool operator==(const Section&) const = default;
};

struct RefEntry {
  std::string key;
  std::string title;
  std::optional<int> year;
  bool verified = false;

  bool operator==(const RefEntry&) const = default;
};

/// A manuscript split into named sections of plain paragraphs, plus its
/// bibliography and revision lineage. Treated as an immutable value once it
/// has passed validate().
struct PaperDoc {
  std::string id;
  std::string title;
  std::vector<std::string> keywords;
  Authorship authorship = Authorship::human;
  int revision_index = 0;
  std::optional<std::string> parent_id;
  std::vector<Section> sections;
  std::vector<RefEntry> references;

  bool operator==(const PaperDoc&) const = default;

  const Section* find_section(std::string_view name) const;
  std::size_t paragraph_count() const;
  // Paragraphs joined by blank lines, sections in order.
  std::string full_text() const;
};

class CorpusError : public Error {
 public:
  enum class Kind {
    malformed_line,
    duplicate_id,
    invariant_violation,
    io_failure,
    missing_doc,
    missing_parent,
    cycle_detected,
  };

  CorpusError(Kind kind, std::string subject, std::string detail, std::size_t line = 0);

  Kind kind() const noexcept { return kind_; }
  // Document id (or path for I/O failures) the error refers to.
  const std::string& subject() const noexcept { return subject_; }
  // 1-based line number for malformed_line, else 0.
  std::size_t line() const noexcept { return line_; }

 private:
  Kind kind_;
  std::string subject_;
  std::size_t line_;
};

// Throws CorpusError(invariant_violation) on the first broken invariant.
void validate(const PaperDoc& doc);

void to_json(nlohmann::json& j, const PaperDoc& doc);
void from_json(const nlohmann::json& j, PaperDoc& doc);
void to_json(nlohmann::json& j, const Section& s);
void from_json(const nlohmann::json& j, Section& s);
void to_json(nlohmann::json& j, const RefEntry& r);
void from_json(const nlohmann::json& j, RefEntry& r);

// One compact JSON object, no trailing newline.
std::string to_ndjson_line(const PaperDoc& doc);
PaperDoc parse_document(std::string_view json_text);

std::vector<PaperDoc> read_corpus(const std::filesystem::path& path);
// Parses NDJSON text; `origin` only labels error messages.
std::vector<PaperDoc> parse_corpus(std::string_view text, std::string_view origin = "<memory>");
void write_corpus(std::span<const PaperDoc> docs, const std::filesystem::path& path);

/// Chain of documents from the lineage root to `id`, following parent_id.
std::vector<PaperDoc> lineage(std::span<const PaperDoc> corpus, std::string_view id);

// Id of the revision-0 ancestor, derived from the id convention `<root>@v<n>`.
std::string lineage_root_id(std::string_view id);
std::string revision_id(std::string_view root_id, int revision_index);

}  // namespace revsim
