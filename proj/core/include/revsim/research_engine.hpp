#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "revsim/docmodel.hpp"
#include "revsim/llm_gateway.hpp"
#include "revsim/prompts.hpp"
#include "revsim/review_engine.hpp"
#include "revsim/search.hpp"

namespace revsim::research {

// Section order of a drafted paper.
inline constexpr std::array<std::string_view, 8> kSectionOrder = {
    "Abstract", "Introduction", "Background", "Method",
    "Experimental Setup", "Results Analysis", "Related Work", "Conclusion",
};

inline constexpr double kDefaultDedupThreshold = 0.95;
inline constexpr std::size_t kMockEmbeddingDim = 64;

namespace stage_tag {
inline constexpr std::string_view ideas = "research.ideas";
inline constexpr std::string_view rank = "research.rank";
inline constexpr std::string_view fix = "research.fix";
inline constexpr std::string_view revise = "research.revise";
inline constexpr std::string_view polish = "research.polish";
// Drafting calls are tagged "research.draft.<slug>", e.g. research.draft.experimental_setup.
std::string draft(std::string_view section);
}  // namespace stage_tag

struct Idea {
  std::string text;
  std::optional<std::vector<double>> embedding;
  std::optional<double> rank_score;
};

struct PolishSpec {
  double ratio = 0.0;
  std::uint64_t seed = 0;
};

class ResearchError : public Error {
 public:
  enum class Kind { zero_vector, length_mismatch, empty_section, external_tool_failure, bad_response };

  ResearchError(Kind kind, std::string message, std::string subject = {})
      : Error(std::move(message)), kind_(kind), subject_(std::move(subject)) {}

  Kind kind() const noexcept { return kind_; }
  // Section name for empty_section.
  const std::string& subject() const noexcept { return subject_; }

 private:
  Kind kind_;
  std::string subject_;
};

double cosine(std::span<const double> u, std::span<const double> v);

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::vector<double> embed(std::string_view text) const = 0;
};

/// Deterministic pseudo-embeddings: a unit vector drawn from a generator
/// seeded by the SHA-256 of the text. Identical texts map to identical
/// vectors; distinct texts are nearly orthogonal in high dimension.
class MockEmbedding final : public EmbeddingBackend {
 public:
  explicit MockEmbedding(std::size_t dim = kMockEmbeddingDim) : dim_(dim) {}
  std::vector<double> embed(std::string_view text) const override;

 private:
  std::size_t dim_;
};

class FunctionEmbedding final : public EmbeddingBackend {
 public:
  using Fn = std::function<std::vector<double>(std::string_view)>;
  explicit FunctionEmbedding(Fn fn) : fn_(std::move(fn)) {}
  std::vector<double> embed(std::string_view text) const override { return fn_(text); }

 private:
  Fn fn_;
};

/// Greedy scan in input order: an idea is dropped when its cosine to any
/// already-kept idea is >= threshold. Ideas without an embedding are embedded
/// first; the returned ideas carry their embeddings.
std::vector<Idea> dedup_ideas(std::span<const Idea> ideas, const EmbeddingBackend& embed,
                              double threshold = kDefaultDedupThreshold);

/// Indices rewritten by polish(): the first round(ratio * count) entries of a
/// seeded Fisher-Yates shuffle of 0..count-1, in ascending order. Depends only
/// on (count, ratio, seed).
std::vector<std::size_t> polish_selection(std::size_t count, double ratio, std::uint64_t seed);
std::size_t polish_count(std::size_t count, double ratio);

struct Diagnostic {
  enum class Kind { unbalanced_brace, unbalanced_environment, undefined_reference, external_tool };
  Kind kind;
  std::string section;
  std::size_t paragraph = 0;
  std::string message;
};

std::string_view to_string(Diagnostic::Kind k);

struct CompileOptions {
  // Shell command run when set; "{workspace}" is replaced by a directory
  // holding main.tex.
  std::optional<std::string> command;
  std::optional<std::filesystem::path> workspace;
};

/// Structural lint: brace and environment balance per paragraph plus cite
/// keys missing from the bibliography. With a configured command, its exit
/// status and log are appended.
std::vector<Diagnostic> compile_check(const PaperDoc& doc, const CompileOptions& options = {});
// Brace/environment checks for one section only; used between drafting steps.
std::vector<Diagnostic> lint_section(const Section& section);

std::string render_latex(const PaperDoc& doc);

/// Removes references the provider cannot confirm and rewrites their in-text
/// citations to "[CIT-REMOVED]"; surviving references are marked verified.
PaperDoc verify_citations(const PaperDoc& doc, const SearchProvider& provider);

struct ResearchOptions {
  double draft_temperature = 1.0;
  double revise_temperature = 1.0;
  double polish_temperature = 1.0;
  int max_tokens = 8192;
  // Lint each drafted section and ask for one fix when it is malformed.
  bool fix_malformed_sections = true;
  std::size_t max_polish_concurrency = 4;
};

struct DraftInput {
  std::vector<std::string> keywords;
  std::vector<SearchRecord> references;
  // Research idea that seeds drafting; the keywords stand in when absent.
  std::optional<std::string> idea;
};

/// The drafting, revision and polishing side of the simulation.
class ResearchEngine {
 public:
  ResearchEngine(llm::Backend& backend, PromptSet prompts, ResearchOptions options = {});

  std::vector<Idea> generate_ideas(std::span<const std::string> keywords,
                                   std::span<const SearchRecord> literature) const;
  // Single backend call returning idea numbers best first; rank_score is the
  // 0-based position. Ideas the model omits keep input order after the rest.
  std::vector<Idea> rank_ideas(std::span<const Idea> ideas, std::span<const std::string> keywords) const;
  // generate -> dedup -> rank -> top idea.
  Idea develop_idea(std::span<const std::string> keywords, std::span<const SearchRecord> literature,
                    const EmbeddingBackend& embed, double threshold = kDefaultDedupThreshold) const;

  /// Generates the eight sections in order, each conditioned on all earlier
  /// ones.
  PaperDoc draft_paper(const DraftInput& input) const;
  PaperDoc revise(const PaperDoc& doc, const review::ReviewBundle& bundle) const;
  PaperDoc polish(const PaperDoc& doc, const PolishSpec& spec) const;

  const ResearchOptions& options() const { return options_; }

 private:
  std::string call(std::string stage, std::string user, double temperature) const;

  llm::Backend& backend_;
  PromptSet prompts_;
  ResearchOptions options_;
  std::string system_;
};

struct ParsedResponse {
  std::vector<std::string> paragraphs;
  std::vector<RefEntry> new_references;
  std::optional<std::string> title;
};

// Unwraps ```latex fences and abstract/section wrappers, pulls ```refs blocks
// and a leading "Title:" line, and splits the rest into paragraphs.
ParsedResponse parse_section_response(std::string_view text);

}  // namespace revsim::research
