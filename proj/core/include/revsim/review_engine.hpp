#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "revsim/docmodel.hpp"
#include "revsim/llm_gateway.hpp"
#include "revsim/prompts.hpp"

namespace revsim::review {

inline constexpr int kReviewers = 3;
inline constexpr int kMinRating = 1;
inline constexpr int kMaxRating = 10;
// Average over the seven stage ratings must reach this to be accepted.
inline constexpr int kAcceptThreshold = 6;

namespace stage_tag {
inline constexpr std::string_view assessment1 = "review.assessment1";
inline constexpr std::string_view rebuttal = "review.rebuttal";
inline constexpr std::string_view assessment2 = "review.assessment2";
inline constexpr std::string_view meta = "review.meta";
}  // namespace stage_tag

enum class Stage { initial, updated };

std::string_view to_string(Stage s);

struct Review {
  int reviewer_id = 1;
  Stage stage = Stage::initial;
  std::string text;
  int rating = kMinRating;

  bool operator==(const Review&) const = default;
};

struct MetaReview {
  std::string text;
  int rating = kMinRating;

  bool operator==(const MetaReview&) const = default;
};

struct ReviewBundle {
  std::string paper_id;
  std::array<Review, kReviewers> initial;
  std::array<std::string, kReviewers> rebuttals;  // index = reviewer_id - 1
  std::array<Review, kReviewers> updated;
  MetaReview meta;

  bool operator==(const ReviewBundle&) const = default;

  // Initial, updated and meta review texts, labelled, for revision prompts.
  std::string reviewer_comments() const;
};

/// Exact non-negative rational; reduced on construction.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d);

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  auto operator<=>(const Rational& o) const { return num * o.den <=> o.num * den; }
  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
};

struct Decision {
  Rational average;
  int sum = 0;
  int count = 0;
  int threshold = kAcceptThreshold;
  bool accepted = false;

  bool operator==(const Decision&) const = default;
};

class ReviewError : public Error {
 public:
  enum class Kind { missing_rating, out_of_range, rating_parse, invalid_bundle };

  ReviewError(Kind kind, std::string message, int value = 0)
      : Error(std::move(message)), kind_(kind), value_(value) {}

  Kind kind() const noexcept { return kind_; }
  int value() const noexcept { return value_; }

 private:
  Kind kind_;
  int value_;
};

class RatingParseError : public ReviewError {
 public:
  RatingParseError(std::string stage, int reviewer_id, const ReviewError& cause);

  const std::string& stage() const noexcept { return stage_; }
  int reviewer_id() const noexcept { return reviewer_id_; }
  Kind cause() const noexcept { return cause_; }

 private:
  std::string stage_;
  int reviewer_id_;
  Kind cause_;
};

enum class RatingMode {
  pattern,  // "Overall rating: N" / "Score: N" markers
  json,     // a JSON object with an integer "rating" field, optionally fenced
};

/// Integer after the first case-insensitive "Overall rating:". When
/// `accept_score_marker` is set (meta-reviews) a "Score:" marker is also
/// accepted; whichever marker occurs first wins.
int extract_rating(std::string_view text, bool accept_score_marker = false);
int extract_rating_json(std::string_view text);

struct ReviewOptions {
  double temperature = 0.3;
  int max_tokens = 4096;
  RatingMode rating_mode = RatingMode::pattern;
  // Run the three reviewer calls of a stage on separate threads.
  bool parallel_reviewers = true;
};

/// Five-stage review pipeline: three independent assessments, three
/// rebuttals, three updated assessments, one meta-review, then the decision.
/// Holds no per-paper state, so one engine may review many papers at once.
class ReviewEngine {
 public:
  ReviewEngine(llm::Backend& backend, PromptSet prompts, ReviewOptions options = {});

  ReviewBundle run_review(const PaperDoc& doc) const;

  const ReviewOptions& options() const { return options_; }

 private:
  int rating_of(std::string_view text, bool meta, std::string_view stage, int reviewer_id) const;
  std::string call(std::string_view stage, const std::string& system, std::string user) const;

  llm::Backend& backend_;
  PromptSet prompts_;
  ReviewOptions options_;
};

// Throws ReviewError(invalid_bundle) on cardinality/id/range violations.
void validate(const ReviewBundle& bundle);

/// Mean of the 3 initial, 3 updated and 1 meta rating, kept exact.
Decision aggregate(const ReviewBundle& bundle);
Decision decide(std::span<const int> ratings, int threshold = kAcceptThreshold);

// "(6 + 4 + 5 + 6 + 5 + 5 + 5)/7 = 5.14"
std::string format_average(const ReviewBundle& bundle, const Decision& decision);

// Paper text as shown to reviewers: section headings and paragraphs.
std::string render_for_review(const PaperDoc& doc);

void to_json(nlohmann::json& j, const Review& r);
void from_json(const nlohmann::json& j, Review& r);
void to_json(nlohmann::json& j, const ReviewBundle& b);
void from_json(const nlohmann::json& j, ReviewBundle& b);
void to_json(nlohmann::json& j, const Decision& d);
void from_json(const nlohmann::json& j, Decision& d);

}  // namespace revsim::review
