#include <doctest.h>

#include <algorithm>

#include <nlohmann/json.hpp>

#include "generators.hpp"
#include "revsim/review_engine.hpp"
#include "test_support.hpp"

using namespace revsim;
using namespace revsim::review;

namespace {

PaperDoc worked_doc() { return parse_corpus(revsim::testing::slurp(revsim::testing::fixture("worked_review/paper.ndjson"))).at(0); }

ReviewBundle bundle_with(const std::array<int, 7>& r) {
  ReviewBundle b;
  b.paper_id = "p";
  for (int i = 0; i < 3; ++i) {
    b.initial[i] = Review{i + 1, Stage::initial, "x", r[i]};
    b.rebuttals[i] = "Response: y";
    b.updated[i] = Review{i + 1, Stage::updated, "z", r[3 + i]};
  }
  b.meta = MetaReview{"m", r[6]};
  return b;
}

ReviewError::Kind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ReviewError& e) {
    return e.kind();
  }
  FAIL("no ReviewError thrown");
  return ReviewError::Kind::invalid_bundle;
}

}  // namespace

TEST_CASE("extract_rating") {
  CHECK(extract_rating("Overall rating: 6\n\nSignificance and novelty: ...") == 6);
  CHECK(extract_rating("overall RATING:   10") == 10);
  CHECK(extract_rating("Preamble\nOverall rating: 3 and later Overall rating: 9") == 3);
  CHECK(kind_of([] { extract_rating("Overall rating: 11"); }) == ReviewError::Kind::out_of_range);
  CHECK(kind_of([] { extract_rating("Overall rating: 0"); }) == ReviewError::Kind::out_of_range);
  CHECK(kind_of([] { extract_rating("no marker here"); }) == ReviewError::Kind::missing_rating);
  CHECK(kind_of([] { extract_rating("Overall rating: high"); }) == ReviewError::Kind::missing_rating);
  // Plain "Score:" only counts for meta-reviews.
  CHECK(kind_of([] { extract_rating("Score: 5"); }) == ReviewError::Kind::missing_rating);
  CHECK(extract_rating("Score: 5\n\nSummary", true) == 5);
  try {
    extract_rating("Overall rating: 11");
  } catch (const ReviewError& e) {
    CHECK(e.value() == 11);
  }
}

TEST_CASE("extract_rating_json") {
  CHECK(extract_rating_json("```json\n{\"rating\": 7, \"summary\": \"ok\"}\n```") == 7);
  CHECK(kind_of([] { extract_rating_json("{\"rating\": 12}"); }) == ReviewError::Kind::out_of_range);
  CHECK(kind_of([] { extract_rating_json("{\"score\": 5}"); }) == ReviewError::Kind::missing_rating);
  CHECK(kind_of([] { extract_rating_json("nothing"); }) == ReviewError::Kind::missing_rating);
}

TEST_CASE("aggregate of the worked review example") {
  auto d = aggregate(bundle_with({6, 4, 5, 6, 5, 5, 5}));
  CHECK(d.average == Rational(36, 7));
  CHECK(d.average.value() == doctest::Approx(36.0 / 7.0).epsilon(1e-12));
  CHECK(d.sum == 36);
  CHECK(d.count == 7);
  CHECK_FALSE(d.accepted);
  CHECK(format_average(bundle_with({6, 4, 5, 6, 5, 5, 5}), d) == "(6 + 4 + 5 + 6 + 5 + 5 + 5)/7 = 5.14");
}

TEST_CASE("threshold is inclusive") {
  CHECK(aggregate(bundle_with({6, 6, 6, 6, 6, 6, 6})).accepted);
  CHECK(aggregate(bundle_with({6, 6, 6, 6, 6, 6, 6})).average == Rational(6, 1));
  CHECK_FALSE(aggregate(bundle_with({6, 6, 6, 5, 6, 6, 6})).accepted);
  CHECK(aggregate(bundle_with({10, 10, 10, 10, 10, 10, 10})).average == Rational(10, 1));
  // 42/7 exactly 6 from mixed ratings.
  CHECK(aggregate(bundle_with({4, 8, 6, 5, 7, 6, 6})).accepted);
}

TEST_CASE("rational arithmetic is reduced") {
  CHECK(Rational(42, 7) == Rational(6, 1));
  CHECK(Rational(36, 7).num == 36);
  CHECK(Rational(36, 7) < Rational(6, 1));
  CHECK_THROWS(Rational(1, 0));
}

TEST_CASE("property: aggregate is permutation-invariant within a stage") {
  gen::Gen g(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::array<int, 7> r;
    for (auto& x : r) x = g.integer(1, 10);
    auto base = aggregate(bundle_with(r));
    auto p = r;
    std::shuffle(p.begin(), p.begin() + 3, g.engine());
    std::shuffle(p.begin() + 3, p.begin() + 6, g.engine());
    CHECK(aggregate(bundle_with(p)) == base);
  }
}

TEST_CASE("property: raising a rating never flips accept to reject") {
  gen::Gen g(8);
  for (int trial = 0; trial < 500; ++trial) {
    std::array<int, 7> r;
    for (auto& x : r) x = g.integer(1, 10);
    const auto before = aggregate(bundle_with(r));
    const auto i = g.size(0, 6);
    if (r[i] == 10) continue;
    r[i] += g.integer(1, 10 - r[i]);
    const auto after = aggregate(bundle_with(r));
    CHECK(after.average > before.average);
    if (before.accepted) CHECK(after.accepted);
  }
}

TEST_CASE("property: accepted iff the exact average reaches 6") {
  gen::Gen g(9);
  for (int trial = 0; trial < 500; ++trial) {
    std::array<int, 7> r;
    int sum = 0;
    for (auto& x : r) sum += (x = g.integer(1, 10));
    CHECK(aggregate(bundle_with(r)).accepted == (sum >= 42));
  }
}

TEST_CASE("bundle validation") {
  auto b = bundle_with({6, 6, 6, 6, 6, 6, 6});
  CHECK_NOTHROW(validate(b));
  b.initial[1].reviewer_id = 1;
  CHECK(kind_of([&] { validate(b); }) == ReviewError::Kind::invalid_bundle);
  b = bundle_with({6, 6, 6, 6, 6, 6, 6});
  b.meta.rating = 0;
  CHECK(kind_of([&] { validate(b); }) == ReviewError::Kind::invalid_bundle);
  b = bundle_with({6, 6, 6, 6, 6, 6, 6});
  b.updated[0].stage = Stage::initial;
  CHECK(kind_of([&] { validate(b); }) == ReviewError::Kind::invalid_bundle);
}

TEST_CASE("run_review replays the worked review transcript with ten calls") {
  auto store = llm::ScriptedBackend::from_file(revsim::testing::fixture("worked_review/fixtures.ndjson"));
  llm::CountingBackend counter(store);
  ReviewEngine engine(counter, PromptSet::defaults());
  auto b = engine.run_review(worked_doc());
  CHECK(counter.total() == 10);
  CHECK(counter.count(stage_tag::assessment1) == 3);
  CHECK(counter.count(stage_tag::rebuttal) == 3);
  CHECK(counter.count(stage_tag::assessment2) == 3);
  CHECK(counter.count(stage_tag::meta) == 1);
  CHECK(b.initial[0].rating == 6);
  CHECK(b.initial[1].rating == 4);
  CHECK(b.initial[2].rating == 5);
  CHECK(b.updated[0].rating == 6);
  CHECK(b.updated[1].rating == 5);
  CHECK(b.updated[2].rating == 5);
  CHECK(b.meta.rating == 5);
  for (int i = 0; i < 3; ++i) {
    CHECK(b.initial[i].reviewer_id == i + 1);
    CHECK(b.rebuttals[i].rfind("Response:", 0) == 0);
  }
  validate(b);
  auto d = aggregate(b);
  CHECK(d.average == Rational(36, 7));
  CHECK_FALSE(d.accepted);
}

TEST_CASE("assessment II conditions on the reviewer's own review and rebuttal") {
  std::mutex mu;
  std::vector<llm::ChatRequest> seen;
  llm::CallbackBackend cb([&](const llm::ChatRequest& r) {
    {
      std::lock_guard lock(mu);
      seen.push_back(r);
    }
    if (r.stage_tag == stage_tag::rebuttal) return std::string("Response: rebut-") + r.messages.back().content.substr(30, 1);
    if (r.stage_tag == stage_tag::meta) return std::string("Score: 6");
    return std::string("Overall rating: 6\nmarker-") + r.stage_tag;
  });
  ReviewEngine engine(cb, PromptSet::defaults(), ReviewOptions{0.3, 4096, RatingMode::pattern, false});
  engine.run_review(worked_doc());
  REQUIRE(seen.size() == 10);
  // Sequential mode keeps stage order: 3 initial, 3 rebuttals, 3 updated, meta.
  for (int i = 0; i < 3; ++i) CHECK(seen[static_cast<std::size_t>(i)].stage_tag == stage_tag::assessment1);
  for (int i = 3; i < 6; ++i) CHECK(seen[static_cast<std::size_t>(i)].stage_tag == stage_tag::rebuttal);
  for (int i = 6; i < 9; ++i) {
    const auto& user = seen[static_cast<std::size_t>(i)].messages.back().content;
    CHECK(seen[static_cast<std::size_t>(i)].stage_tag == stage_tag::assessment2);
    CHECK(user.find("marker-review.assessment1") != std::string::npos);
    CHECK(user.find("Response: rebut-") != std::string::npos);
  }
  const auto& meta = seen[9].messages.back().content;
  CHECK(meta.find("marker-review.assessment1") != std::string::npos);
  CHECK(meta.find("marker-review.assessment2") != std::string::npos);
}

TEST_CASE("a stage II response without a rating names the stage and reviewer") {
  llm::CallbackBackend cb([](const llm::ChatRequest& r) {
    const auto& user = r.messages.back().content;
    if (r.stage_tag == stage_tag::assessment2 && user.find("Reviewer: 2") != std::string::npos)
      return std::string("Summary only, no marker.");
    if (r.stage_tag == stage_tag::meta) return std::string("Score: 6");
    if (r.stage_tag == stage_tag::rebuttal) return std::string("Response: ok");
    return std::string("Overall rating: 6");
  });
  ReviewEngine engine(cb, PromptSet::defaults());
  try {
    engine.run_review(worked_doc());
    FAIL("expected RatingParse");
  } catch (const RatingParseError& e) {
    CHECK(e.kind() == ReviewError::Kind::rating_parse);
    CHECK(e.stage() == stage_tag::assessment2);
    CHECK(e.reviewer_id() == 2);
    CHECK(e.cause() == ReviewError::Kind::missing_rating);
  }
}

TEST_CASE("json rating mode") {
  llm::CallbackBackend cb([](const llm::ChatRequest& r) {
    if (r.stage_tag == stage_tag::rebuttal) return std::string("Response: ok");
    return std::string("{\"rating\": 8}");
  });
  ReviewEngine engine(cb, PromptSet::defaults(), ReviewOptions{0.3, 4096, RatingMode::json, true});
  auto d = aggregate(engine.run_review(worked_doc()));
  CHECK(d.average == Rational(8, 1));
  CHECK(d.accepted);
}

TEST_CASE("bundle json round-trip") {
  auto store = llm::ScriptedBackend::from_file(revsim::testing::fixture("worked_review/fixtures.ndjson"));
  ReviewEngine engine(store, PromptSet::defaults());
  auto b = engine.run_review(worked_doc());
  nlohmann::json j = b;
  CHECK(j.get<ReviewBundle>() == b);
  nlohmann::json dj = aggregate(b);
  CHECK(dj.get<Decision>() == aggregate(b));
}

TEST_CASE("engine refuses a prompt set without review templates") {
  llm::CallbackBackend cb([](const llm::ChatRequest&) { return std::string(); });
  CHECK_THROWS_AS(ReviewEngine(cb, PromptSet{}), Error);
}
