#include <doctest.h>

#include <atomic>
#include <functional>

#include "generators.hpp"
#include "revsim/simulator.hpp"
#include "test_support.hpp"

using namespace revsim;
namespace tst = revsim::testing;

namespace {

// Rating for (root id, revision index); every stage gets the same number.
using RatingFn = std::function<int(const std::string&, int)>;

std::string manuscript_of(const std::string& prompt) {
  const std::string marker = "Manuscript: ";
  auto a = prompt.find(marker);
  REQUIRE(a != std::string::npos);
  a += marker.size();
  return prompt.substr(a, prompt.find('\n', a) - a);
}

std::string echo_revision(const llm::ChatRequest& r) {
  const auto& u = r.messages.back().content;
  const std::string open = "#### Section to revise begin ####\n";
  auto a = u.find(open) + open.size();
  auto b = u.find("\n#### Section to revise end ####", a);
  return u.substr(a, b - a);
}

struct World {
  std::atomic<long> review_calls{0};
  llm::CallbackBackend backend;
  review::ReviewEngine reviewer;
  research::ResearchEngine researcher;

  explicit World(RatingFn rating)
      : backend([this, rating](const llm::ChatRequest& r) -> std::string {
          if (r.stage_tag == research::stage_tag::revise) return echo_revision(r);
          ++review_calls;
          if (r.stage_tag == review::stage_tag::rebuttal) return "Response: noted.";
          const auto id = manuscript_of(r.messages.back().content);
          const auto root = lineage_root_id(id);
          const int rev = root == id ? 0 : std::stoi(id.substr(root.size() + 2));
          const int x = rating(root, rev);
          return r.stage_tag == review::stage_tag::meta ? "Score: " + std::to_string(x)
                                                        : "Overall rating: " + std::to_string(x);
        }),
        reviewer(backend, PromptSet::defaults()),
        researcher(backend, PromptSet::defaults()) {}

  Engines engines() const { return Engines{reviewer, researcher}; }
};

PaperDoc make_doc(gen::Gen& g, const std::string& id, Authorship a, std::vector<std::string> keywords = {}) {
  auto d = g.doc(id);
  d.authorship = a;
  if (!keywords.empty()) d.keywords = std::move(keywords);
  return d;
}

std::vector<PaperDoc> small_corpus() {
  gen::Gen g(41);
  return {make_doc(g, "h1", Authorship::human), make_doc(g, "h2", Authorship::human), make_doc(g, "l1", Authorship::llm),
          make_doc(g, "l2", Authorship::llm)};
}

// h1 accepted at once, h2 never, l1 after two revisions, l2 after one.
int small_plan(const std::string& root, int rev) {
  if (root == "h1") return 7;
  if (root == "h2") return 5;
  if (root == "l1") return rev >= 2 ? 6 : 4;
  return rev >= 1 ? 8 : 5;
}

}  // namespace

TEST_CASE("revision ids carry the revision index the responder reads") {
  CHECK(lineage_root_id(revision_id("l1", 2)) == "l1");
  CHECK(revision_id("l1", 2) == "l1@v2");
}

TEST_CASE("run_round reviews every submission in order") {
  gen::Gen g(42);
  std::vector<PaperDoc> subs;
  for (int i = 0; i < 35; ++i) subs.push_back(make_doc(g, "h" + std::to_string(i), Authorship::human));
  for (int i = 0; i < 22; ++i) subs.push_back(make_doc(g, "l" + std::to_string(i), Authorship::llm));
  World w([](const std::string& root, int) { return root[0] == 'h' ? 6 : 5; });
  auto rec = run_round(subs, w.reviewer, 1, 8);
  REQUIRE(rec.entries.size() == 57);
  CHECK(w.review_calls == 570);
  for (std::size_t i = 0; i < subs.size(); ++i) {
    CHECK(rec.entries[i].paper_id == subs[i].id);
    CHECK(rec.entries[i].authorship == subs[i].authorship);
    CHECK(rec.entries[i].decision == review::aggregate(rec.entries[i].bundle));
  }
  RunLedger ledger;
  ledger.rounds.push_back(rec);
  auto s = summarize(ledger, 1);
  CHECK(s.human.submitted == 35);
  CHECK(s.llm.submitted == 22);
  CHECK(s.human.acc_rate == std::optional<double>(1.0));
  CHECK(s.llm.acc_rate == std::optional<double>(0.0));
  CHECK(*s.human.avg_score == doctest::Approx(6.0));
  CHECK(*s.llm.avg_score == doctest::Approx(5.0));

  CHECK_THROWS_AS(run_round(std::span<const PaperDoc>{}, w.reviewer, 1), PreconditionError);
  CHECK_THROWS_AS(run_round(subs, w.reviewer, 0), PreconditionError);
}

TEST_CASE("group averages match hand-computed means") {
  gen::Gen g(43);
  std::vector<PaperDoc> subs{make_doc(g, "ha", Authorship::human), make_doc(g, "hb", Authorship::human),
                             make_doc(g, "la", Authorship::llm), make_doc(g, "lb", Authorship::llm)};
  // Human means 6.4 and 6.0 -> 6.2; llm 5.2 and 5.0 -> 5.1. Stage ratings are
  // constant per paper, so a paper's mean equals its rating unless mixed.
  World w([](const std::string& root, int) {
    if (root == "ha") return 7;
    if (root == "hb") return 5;
    if (root == "la") return 6;
    return 4;
  });
  RunLedger ledger;
  ledger.rounds.push_back(run_round(subs, w.reviewer, 1));
  auto s = summarize(ledger, 1);
  CHECK(*s.human.avg_score == doctest::Approx(6.0));
  CHECK(*s.llm.avg_score == doctest::Approx(5.0));
  CHECK(s.human.accepted == 1);
  CHECK(s.llm.accepted == 1);
}

TEST_CASE("simulation stops early once everything is accepted") {
  World w([](const std::string&, int) { return 6; });
  auto corpus = small_corpus();
  auto ledger = run_simulation(corpus, w.engines());
  CHECK(ledger.rounds.size() == 1);
  for (const auto& [id, s] : ledger.final_status) {
    CHECK(s.state == FinalState::accepted);
    CHECK(s.accepted_at_round == std::optional<int>(1));
  }
}

TEST_CASE("simulation follows each paper until acceptance or the round cap") {
  World w(small_plan);
  auto corpus = small_corpus();
  auto ledger = run_simulation(corpus, w.engines());
  REQUIRE(ledger.rounds.size() == 6);
  std::vector<std::size_t> sizes;
  for (const auto& r : ledger.rounds) sizes.push_back(r.entries.size());
  CHECK(sizes == std::vector<std::size_t>{4, 3, 2, 1, 1, 1});
  CHECK(ledger.final_status.at("h1").accepted_at_round == std::optional<int>(1));
  CHECK(ledger.final_status.at("l2").accepted_at_round == std::optional<int>(2));
  CHECK(ledger.final_status.at("l1").accepted_at_round == std::optional<int>(3));
  CHECK(ledger.final_status.at("h2").state == FinalState::never_accepted);
  CHECK(ledger.final_status.at("h2").last_round == 6);
  CHECK(ledger.rounds[5].entries[0].paper_id == revision_id("h2", 5));
  validate(ledger);

  SimulationOptions two;
  two.max_rounds = 2;
  World w2(small_plan);
  auto capped = run_simulation(corpus, w2.engines(), two);
  CHECK(capped.rounds.size() == 2);
  CHECK(capped.final_status.at("l1").state == FinalState::never_accepted);
  SimulationOptions bad;
  bad.max_rounds = 0;
  CHECK_THROWS_AS(run_simulation(corpus, w2.engines(), bad), PreconditionError);
}

TEST_CASE("property: rejected sets shrink and every entry descends from the round before") {
  gen::Gen g(44);
  for (int trial = 0; trial < 15; ++trial) {
    std::vector<PaperDoc> corpus;
    std::map<std::string, int> accept_at;
    const auto n = g.size(1, 8);
    for (std::size_t i = 0; i < n; ++i) {
      auto id = "p" + std::to_string(i);
      corpus.push_back(make_doc(g, id, g.coin() ? Authorship::human : Authorship::llm));
      accept_at[id] = g.integer(0, 7);  // revision index that first passes; 7 never within 6 rounds
    }
    World w([&](const std::string& root, int rev) { return rev >= accept_at.at(root) ? 6 : g.integer(1, 5); });
    SimulationOptions opts;
    opts.concurrency = 1;  // the responder draws from a shared generator
    auto ledger = run_simulation(corpus, w.engines(), opts);
    validate(ledger);
    for (std::size_t r = 1; r < ledger.rounds.size(); ++r) {
      std::set<std::string> rejected;
      for (const auto& e : ledger.rounds[r - 1].entries)
        if (!e.decision.accepted) rejected.insert(e.root_id);
      std::set<std::string> now;
      for (const auto& e : ledger.rounds[r].entries) now.insert(e.root_id);
      CHECK(now == rejected);
    }
    for (const auto& [id, at] : accept_at) {
      const auto& s = ledger.final_status.at(id);
      if (at <= 5) CHECK(s.accepted_at_round == std::optional<int>(at + 1));
      else CHECK(s.state == FinalState::never_accepted);
    }
  }
}

TEST_CASE("ledger validation catches tampering") {
  World w(small_plan);
  auto ledger = run_simulation(small_corpus(), w.engines());
  auto kind = [](const RunLedger& l) {
    try {
      validate(l);
    } catch (const SimulationError& e) {
      return e.kind();
    }
    FAIL("validate accepted a broken ledger");
    return SimulationError::Kind::missing_round;
  };
  auto t = ledger;
  t.rounds[0].entries[0].decision.accepted = !t.rounds[0].entries[0].decision.accepted;
  CHECK(kind(t) == SimulationError::Kind::ledger_invariant);
  t = ledger;
  t.rounds[1].round = 3;
  CHECK(kind(t) == SimulationError::Kind::ledger_invariant);
  t = ledger;
  t.rounds[1].entries.push_back(ledger.rounds[0].entries[0]);  // h1 was accepted in round 1
  CHECK(kind(t) == SimulationError::Kind::ledger_invariant);
  t = ledger;
  t.rounds[2].entries[0].submitted.parent_id = "elsewhere";
  CHECK(kind(t) == SimulationError::Kind::ledger_invariant);
  CHECK_THROWS_AS(summarize(ledger, 9), SimulationError);
}

TEST_CASE("run directory round-trips and earlier rounds are never rewritten") {
  tst::TempDir tmp;
  World w(small_plan);
  std::map<int, std::string> snapshots;
  SimulationOptions opts;
  opts.run_dir = tmp.path();
  opts.config_snapshot = {{"seed", 1}};
  opts.on_round = [&](const RoundRecord& r) {
    for (int k = 1; k <= r.round; ++k) {
      auto text = tst::slurp(tmp / ("round-" + std::to_string(k) + ".ndjson"));
      if (k < r.round) CHECK(snapshots.at(k) == text);
      else snapshots[k] = text;
    }
  };
  auto ledger = run_simulation(small_corpus(), w.engines(), opts);
  CHECK(snapshots.size() == 6);
  auto back = read_ledger(tmp.path());
  CHECK(back.rounds == ledger.rounds);
  CHECK(back.final_status == ledger.final_status);
  CHECK(back.config == opts.config_snapshot);
}

TEST_CASE("an interrupted run resumes at its last completed round") {
  auto corpus = small_corpus();
  World fresh(small_plan);
  auto reference = run_simulation(corpus, fresh.engines());

  tst::TempDir tmp;
  SimulationOptions first;
  first.max_rounds = 2;
  first.run_dir = tmp.path();
  World a(small_plan);
  run_simulation(corpus, a.engines(), first);

  SimulationOptions rest = first;
  rest.max_rounds = 6;
  World b(small_plan);
  auto resumed = run_simulation(corpus, b.engines(), rest);
  CHECK(resumed.rounds == reference.rounds);
  CHECK(resumed.final_status == reference.final_status);
  // Rounds 3..6 hold 2 + 1 + 1 + 1 papers at ten review calls each.
  CHECK(b.review_calls == 50);

  auto other = corpus;
  std::swap(other[0], other[1]);
  CHECK_THROWS_AS(run_simulation(other, b.engines(), rest), SimulationError);
}

TEST_CASE("a failure mid-round leaves no partial round behind") {
  tst::TempDir tmp;
  World w([](const std::string& root, int rev) {
    if (root == "l1" && rev == 1) throw llm::GatewayError(llm::GatewayError::Kind::missing_fixture, "MissingFixture");
    return small_plan(root, rev);
  });
  SimulationOptions opts;
  opts.run_dir = tmp.path();
  CHECK_THROWS_AS(run_simulation(small_corpus(), w.engines(), opts), llm::GatewayError);
  CHECK(std::filesystem::exists(tmp / "round-1.ndjson"));
  CHECK_FALSE(std::filesystem::exists(tmp / "round-2.ndjson"));
  auto partial = read_ledger(tmp.path());
  CHECK(partial.rounds.size() == 1);
}

TEST_CASE("frozen papers leave after round 1 unless accepted") {
  World w(small_plan);
  SimulationOptions opts;
  opts.frozen_ids = {"h1", "h2"};
  auto ledger = run_simulation(small_corpus(), w.engines(), opts);
  CHECK(ledger.final_status.at("h1").state == FinalState::accepted);
  CHECK(ledger.final_status.at("h2").state == FinalState::frozen);
  CHECK(ledger.final_status.at("h2").last_round == 1);
  for (std::size_t r = 1; r < ledger.rounds.size(); ++r)
    for (const auto& e : ledger.rounds[r].entries) CHECK(e.root_id != "h2");
  CHECK(ledger.rounds.size() == 3);
}

TEST_CASE("win rates over keyword-matched pairs") {
  gen::Gen g(45);
  std::vector<PaperDoc> subs{
      make_doc(g, "ha", Authorship::human, {"alpha"}), make_doc(g, "la", Authorship::llm, {"Alpha"}),
      make_doc(g, "hb", Authorship::human, {"beta", "x"}), make_doc(g, "lb", Authorship::llm, {"x", "beta"}),
      make_doc(g, "hc", Authorship::human, {"gamma"}), make_doc(g, "lc", Authorship::llm, {"gamma"}),
      make_doc(g, "hd", Authorship::human, {"delta"}), make_doc(g, "le", Authorship::llm, {"epsilon"}),
  };
  const std::map<std::string, int> r{{"ha", 5}, {"la", 6}, {"hb", 6}, {"lb", 5}, {"hc", 6},
                                     {"lc", 6}, {"hd", 9}, {"le", 1}};
  World w([&](const std::string& root, int) { return r.at(root); });
  RunLedger ledger;
  ledger.rounds.push_back(run_round(subs, w.reviewer, 1));
  auto s = summarize(ledger, 1);
  REQUIRE(s.win_rates);
  CHECK(s.win_rates->pairs == 3);
  CHECK(s.win_rates->human == doctest::Approx(1.0 / 3));
  CHECK(s.win_rates->llm == doctest::Approx(1.0 / 3));
  CHECK(s.win_rates->tie == doctest::Approx(1.0 / 3));
  auto table = format_summary_table(s);
  CHECK(table.find("Human Paper") != std::string::npos);
  CHECK(table.find("33%") != std::string::npos);
  auto csv = summary_csv(s);
  CHECK(csv.rfind("round,paper_type,submitted,accepted,avg_score,win_rate,acc_rate,tie_rate,pairs\n", 0) == 0);

  RunLedger unmatched;
  std::vector<PaperDoc> lone{subs[6], subs[7]};
  unmatched.rounds.push_back(run_round(lone, w.reviewer, 1));
  auto u = summarize(unmatched, 1);
  CHECK_FALSE(u.win_rates);
  CHECK(format_summary_table(u).find("n/a") != std::string::npos);
}

TEST_CASE("demo corpus replays its scripted acceptance plan") {
  auto corpus = read_corpus(tst::fixture("demo/corpus.ndjson"));
  auto store = llm::ScriptedBackend::from_file(tst::fixture("demo/fixtures.ndjson"));
  review::ReviewEngine reviewer(store, PromptSet::defaults());
  research::ResearchEngine researcher(store, PromptSet::defaults());
  auto ledger = run_simulation(corpus, Engines{reviewer, researcher});
  std::vector<std::size_t> sizes;
  for (const auto& r : ledger.rounds) sizes.push_back(r.entries.size());
  CHECK(sizes == std::vector<std::size_t>{9, 6, 3, 1, 1, 1});
  const std::map<std::string, int> plan{{"H1", 2}, {"H2", 1}, {"H3", 3}, {"H4", 2}, {"H5", 0},
                                        {"L1", 1}, {"L2", 2}, {"L3", 3}, {"L4", 1}};
  for (const auto& [id, at] : plan) {
    const auto& s = ledger.final_status.at(id);
    if (at) CHECK(s.accepted_at_round == std::optional<int>(at));
    else CHECK(s.state == FinalState::never_accepted);
  }
  auto s = summarize(ledger, 1);
  CHECK(s.human.submitted == 5);
  CHECK(s.llm.submitted == 4);
  CHECK(s.win_rates.has_value());
}
