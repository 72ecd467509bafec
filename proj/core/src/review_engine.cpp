#include "revsim/review_engine.hpp"

#include <algorithm>
#include <cctype>
#include <future>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "io.hpp"

namespace revsim::review {

using nlohmann::json;

std::string_view to_string(Stage s) { return s == Stage::initial ? "initial" : "updated"; }

Rational::Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
  if (d <= 0) throw PreconditionError("rational denominator must be positive");
  auto g = std::gcd(n < 0 ? -n : n, d);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

namespace {

std::size_t find_ci(std::string_view hay, std::string_view needle) {
  if (needle.size() > hay.size()) return std::string_view::npos;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < needle.size(); ++k) {
      if (std::tolower(static_cast<unsigned char>(hay[i + k])) != needle[k]) {
        ok = false;
        break;
      }
    }
    if (ok) return i;
  }
  return std::string_view::npos;
}

int parse_after_marker(std::string_view text, std::size_t pos) {
  while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '*')) ++pos;
  bool negative = false;
  if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) {
    negative = text[pos] == '-';
    ++pos;
  }
  std::size_t start = pos;
  long long value = 0;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
    value = std::min<long long>(value * 10 + (text[pos] - '0'), 1'000'000'000LL);
    ++pos;
  }
  if (pos == start) throw ReviewError(ReviewError::Kind::missing_rating, "MissingRating: marker without a number");
  if (negative) value = -value;
  if (value < kMinRating || value > kMaxRating)
    throw ReviewError(ReviewError::Kind::out_of_range, "OutOfRange(" + std::to_string(value) + ")",
                      static_cast<int>(value));
  return static_cast<int>(value);
}

}  // namespace

RatingParseError::RatingParseError(std::string stage, int reviewer_id, const ReviewError& cause)
    : ReviewError(Kind::rating_parse,
                  "RatingParse(" + stage + ", reviewer " + std::to_string(reviewer_id) + "): " + cause.what(),
                  cause.value()),
      stage_(std::move(stage)),
      reviewer_id_(reviewer_id),
      cause_(cause.kind()) {}

int extract_rating(std::string_view text, bool accept_score_marker) {
  constexpr std::string_view overall = "overall rating:";
  constexpr std::string_view score = "score:";
  auto at = find_ci(text, overall);
  std::size_t marker_len = overall.size();
  if (accept_score_marker) {
    auto s = find_ci(text, score);
    if (s != std::string_view::npos && (at == std::string_view::npos || s < at)) {
      at = s;
      marker_len = score.size();
    }
  }
  if (at == std::string_view::npos)
    throw ReviewError(ReviewError::Kind::missing_rating, "MissingRating: no rating marker found");
  return parse_after_marker(text, at + marker_len);
}

int extract_rating_json(std::string_view text) {
  auto open = text.find('{');
  auto close = text.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open)
    throw ReviewError(ReviewError::Kind::missing_rating, "MissingRating: no JSON object in response");
  json j;
  try {
    j = json::parse(text.substr(open, close - open + 1));
  } catch (const json::exception& e) {
    throw ReviewError(ReviewError::Kind::missing_rating, std::string("MissingRating: ") + e.what());
  }
  auto it = j.find("rating");
  if (it == j.end() || !it->is_number_integer())
    throw ReviewError(ReviewError::Kind::missing_rating, "MissingRating: no integer 'rating' field");
  auto v = it->get<long long>();
  if (v < kMinRating || v > kMaxRating)
    throw ReviewError(ReviewError::Kind::out_of_range, "OutOfRange(" + std::to_string(v) + ")", static_cast<int>(v));
  return static_cast<int>(v);
}

std::string ReviewBundle::reviewer_comments() const {
  std::ostringstream out;
  for (const auto& r : initial) out << "Reviewer " << r.reviewer_id << " (initial):\n" << r.text << "\n\n";
  for (const auto& r : updated) out << "Reviewer " << r.reviewer_id << " (updated):\n" << r.text << "\n\n";
  out << "Area chair:\n" << meta.text;
  return out.str();
}

std::string render_for_review(const PaperDoc& doc) {
  std::string out;
  for (const auto& s : doc.sections) {
    if (!out.empty()) out += "\n\n";
    out += "## " + s.name;
    for (const auto& p : s.paragraphs) out += "\n\n" + p;
  }
  return out;
}

ReviewEngine::ReviewEngine(llm::Backend& backend, PromptSet prompts, ReviewOptions options)
    : backend_(backend), prompts_(std::move(prompts)), options_(options) {
  prompts_.require(PromptSet::review_templates());
}

std::string ReviewEngine::call(std::string_view stage, const std::string& system, std::string user) const {
  auto request = llm::make_request(std::string(stage), system, std::move(user), options_.temperature,
                                   options_.max_tokens);
  return backend_.complete(request).text;
}

int ReviewEngine::rating_of(std::string_view text, bool meta, std::string_view stage, int reviewer_id) const {
  try {
    return options_.rating_mode == RatingMode::json ? extract_rating_json(text) : extract_rating(text, meta);
  } catch (const RatingParseError&) {
    throw;
  } catch (const ReviewError& e) {
    throw RatingParseError(std::string(stage), reviewer_id, e);
  }
}

ReviewBundle ReviewEngine::run_review(const PaperDoc& doc) const {
  const std::string paper = render_for_review(doc);
  auto system_for = [&](const std::string& role) { return prompts_.render("review.system", {{"role", role}}); };
  auto base_vars = [&](int reviewer) {
    return std::map<std::string, std::string, std::less<>>{
        {"paper_id", doc.id},
        {"title", doc.title},
        {"paper", paper},
        {"reviewer_id", std::to_string(reviewer)},
    };
  };

  // Runs fn(reviewer_index) for the three reviewers, optionally in parallel;
  // results stay indexed by reviewer so the bundle order is deterministic.
  auto per_reviewer = [&](auto fn) {
    std::array<std::string, kReviewers> out;
    if (options_.parallel_reviewers) {
      std::array<std::future<std::string>, kReviewers> futures;
      for (int i = 0; i < kReviewers; ++i) futures[i] = std::async(std::launch::async, fn, i);
      for (int i = 0; i < kReviewers; ++i) futures[i].wait();
      for (int i = 0; i < kReviewers; ++i) out[i] = futures[i].get();
    } else {
      for (int i = 0; i < kReviewers; ++i) out[i] = fn(i);
    }
    return out;
  };

  ReviewBundle bundle;
  bundle.paper_id = doc.id;

  auto initial_text = per_reviewer([&](int i) {
    return call(stage_tag::assessment1, system_for("reviewer " + std::to_string(i + 1)),
                prompts_.render("review.assessment1", base_vars(i + 1)));
  });
  for (int i = 0; i < kReviewers; ++i) {
    bundle.initial[i] = Review{i + 1, Stage::initial, initial_text[i],
                               rating_of(initial_text[i], false, stage_tag::assessment1, i + 1)};
  }

  bundle.rebuttals = per_reviewer([&](int i) {
    auto vars = base_vars(i + 1);
    vars["review"] = bundle.initial[i].text;
    return call(stage_tag::rebuttal, system_for("the authors of the submission"),
                prompts_.render("review.rebuttal", vars));
  });

  auto updated_text = per_reviewer([&](int i) {
    auto vars = base_vars(i + 1);
    vars["review"] = bundle.initial[i].text;
    vars["rebuttal"] = bundle.rebuttals[i];
    return call(stage_tag::assessment2, system_for("reviewer " + std::to_string(i + 1)),
                prompts_.render("review.assessment2", vars));
  });
  for (int i = 0; i < kReviewers; ++i) {
    bundle.updated[i] = Review{i + 1, Stage::updated, updated_text[i],
                               rating_of(updated_text[i], false, stage_tag::assessment2, i + 1)};
  }

  std::ostringstream all;
  for (const auto& r : bundle.initial)
    all << "#### Reviewer " << r.reviewer_id << ", initial assessment ####\n" << r.text << "\n\n";
  for (const auto& r : bundle.updated)
    all << "#### Reviewer " << r.reviewer_id << ", updated assessment ####\n" << r.text << "\n\n";
  auto meta_text = call(stage_tag::meta, system_for("the area chair"),
                        prompts_.render("review.meta", {{"paper_id", doc.id},
                                                        {"title", doc.title},
                                                        {"reviews", all.str()}}));
  bundle.meta = MetaReview{meta_text, rating_of(meta_text, true, stage_tag::meta, 0)};
  return bundle;
}

void validate(const ReviewBundle& b) {
  auto bad = [](const std::string& what) { throw ReviewError(ReviewError::Kind::invalid_bundle, "InvalidBundle: " + what); };
  for (const auto* stage : {&b.initial, &b.updated}) {
    std::array<bool, kReviewers> seen{};
    for (const auto& r : *stage) {
      if (r.reviewer_id < 1 || r.reviewer_id > kReviewers) bad("reviewer id out of 1..3");
      if (seen[r.reviewer_id - 1]) bad("reviewer id repeated within a stage");
      seen[r.reviewer_id - 1] = true;
      if (r.rating < kMinRating || r.rating > kMaxRating) bad("rating out of 1..10");
    }
  }
  for (const auto& r : b.initial)
    if (r.stage != Stage::initial) bad("initial review with wrong stage");
  for (const auto& r : b.updated)
    if (r.stage != Stage::updated) bad("updated review with wrong stage");
  if (b.meta.rating < kMinRating || b.meta.rating > kMaxRating) bad("meta rating out of 1..10");
}

Decision decide(std::span<const int> ratings, int threshold) {
  if (ratings.empty()) throw PreconditionError("decide() needs at least one rating");
  Decision d;
  d.sum = std::accumulate(ratings.begin(), ratings.end(), 0);
  d.count = static_cast<int>(ratings.size());
  d.threshold = threshold;
  d.average = Rational(d.sum, d.count);
  // average >= threshold  <=>  sum >= threshold * count, in integers.
  d.accepted = d.sum >= threshold * d.count;
  return d;
}

Decision aggregate(const ReviewBundle& bundle) {
  validate(bundle);
  std::array<int, 2 * kReviewers + 1> ratings{};
  std::size_t k = 0;
  for (const auto& r : bundle.initial) ratings[k++] = r.rating;
  for (const auto& r : bundle.updated) ratings[k++] = r.rating;
  ratings[k] = bundle.meta.rating;
  return decide(ratings);
}

std::string format_average(const ReviewBundle& bundle, const Decision& decision) {
  std::ostringstream out;
  out << "(";
  bool first = true;
  auto add = [&](int r) {
    if (!first) out << " + ";
    out << r;
    first = false;
  };
  for (const auto& r : bundle.initial) add(r.rating);
  for (const auto& r : bundle.updated) add(r.rating);
  add(bundle.meta.rating);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", decision.average.value());
  out << ")/" << decision.count << " = " << buf;
  return out.str();
}

void to_json(json& j, const Review& r) {
  j = json{{"reviewer_id", r.reviewer_id}, {"stage", to_string(r.stage)}, {"text", r.text}, {"rating", r.rating}};
}

void from_json(const json& j, Review& r) {
  j.at("reviewer_id").get_to(r.reviewer_id);
  auto stage = j.at("stage").get<std::string>();
  if (stage != "initial" && stage != "updated") throw ReviewError(ReviewError::Kind::invalid_bundle, "bad stage " + stage);
  r.stage = stage == "initial" ? Stage::initial : Stage::updated;
  j.at("text").get_to(r.text);
  j.at("rating").get_to(r.rating);
}

void to_json(json& j, const ReviewBundle& b) {
  json rebuttals = json::array();
  for (int i = 0; i < kReviewers; ++i) rebuttals.push_back({{"reviewer_id", i + 1}, {"text", b.rebuttals[i]}});
  j = json{{"paper_id", b.paper_id},
           {"initial", b.initial},
           {"rebuttals", rebuttals},
           {"updated", b.updated},
           {"meta", {{"text", b.meta.text}, {"rating", b.meta.rating}}}};
}

void from_json(const json& j, ReviewBundle& b) {
  b.paper_id = j.value("paper_id", std::string{});
  auto read_stage = [](const json& arr, std::array<Review, kReviewers>& out) {
    if (!arr.is_array() || arr.size() != kReviewers)
      throw ReviewError(ReviewError::Kind::invalid_bundle, "InvalidBundle: stage must hold exactly 3 reviews");
    for (int i = 0; i < kReviewers; ++i) arr[i].get_to(out[i]);
  };
  read_stage(j.at("initial"), b.initial);
  read_stage(j.at("updated"), b.updated);
  const auto& reb = j.at("rebuttals");
  if (!reb.is_array() || reb.size() != kReviewers)
    throw ReviewError(ReviewError::Kind::invalid_bundle, "InvalidBundle: exactly 3 rebuttals required");
  for (const auto& r : reb) {
    int id = r.at("reviewer_id").get<int>();
    if (id < 1 || id > kReviewers) throw ReviewError(ReviewError::Kind::invalid_bundle, "InvalidBundle: rebuttal id");
    b.rebuttals[id - 1] = r.at("text").get<std::string>();
  }
  b.meta.text = j.at("meta").at("text").get<std::string>();
  b.meta.rating = j.at("meta").at("rating").get<int>();
  validate(b);
}

void to_json(json& j, const Decision& d) {
  j = json{{"sum", d.sum},
           {"count", d.count},
           {"average", d.average.value()},
           {"average_num", d.average.num},
           {"average_den", d.average.den},
           {"threshold", d.threshold},
           {"accepted", d.accepted}};
}

void from_json(const json& j, Decision& d) {
  d.sum = j.at("sum").get<int>();
  d.count = j.at("count").get<int>();
  d.threshold = j.value("threshold", kAcceptThreshold);
  d.average = Rational(d.sum, d.count);
  d.accepted = j.at("accepted").get<bool>();
  if (d.accepted != (d.sum >= d.threshold * d.count))
    throw ReviewError(ReviewError::Kind::invalid_bundle, "InvalidBundle: decision inconsistent with average");
}

}  // namespace revsim::review
