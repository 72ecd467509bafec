#include <doctest.h>

#include <nlohmann/json.hpp>

#include "revsim/analysis/features.hpp"
#include "revsim/simulator.hpp"
#include "test_support.hpp"

using namespace revsim;
namespace tst = revsim::testing;

namespace {

std::string q(const std::filesystem::path& p) { return tst::shell_quote(p.string()); }

std::string review_args(const std::string& store) {
  return "review " + q(tst::fixture("worked_review/paper.ndjson")) + " --fixtures " + q(tst::fixture("worked_review/" + store));
}

std::string demo_sim(const std::filesystem::path& out) {
  return "simulate --config " + q(tst::fixture("demo/demo.toml")) + " --out " + q(out);
}

}  // namespace

TEST_CASE("review replays the worked review example") {
  tst::TempDir tmp;
  auto r = tst::run_cli(review_args("fixtures.ndjson") + " --out " + q(tmp / "bundle.ndjson"));
  INFO(r.err);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("Average Score: (6 + 4 + 5 + 6 + 5 + 5 + 5)/7 = 5.14") != std::string::npos);
  CHECK(r.out.find("Decision: REJECT") != std::string::npos);
  CHECK(r.out.find("Assessment I, reviewer 2: Overall rating 4") != std::string::npos);
  CHECK(r.out.find("Meta-review: Score 5") != std::string::npos);
  auto j = nlohmann::json::parse(tst::slurp(tmp / "bundle.ndjson"));
  CHECK(j["paper_id"] == "tabular-fairness");
  CHECK(j["decision"]["accepted"] == false);
}

TEST_CASE("review decisions at the rating extremes and the boundary") {
  tst::TempDir tmp;
  auto tens = tst::run_cli(review_args("all_tens.ndjson") + " --out " + q(tmp / "a"));
  CHECK(tens.exit_code == 0);
  CHECK(tens.out.find("= 10.00") != std::string::npos);
  CHECK(tens.out.find("Decision: ACCEPT") != std::string::npos);
  auto sixes = tst::run_cli(review_args("all_sixes.ndjson") + " --out " + q(tmp / "b"));
  CHECK(sixes.out.find("Decision: ACCEPT") != std::string::npos);
  auto five = tst::run_cli(review_args("one_five.ndjson") + " --out " + q(tmp / "c"));
  CHECK(five.out.find("= 5.86") != std::string::npos);
  CHECK(five.out.find("Decision: REJECT") != std::string::npos);
}

TEST_CASE("review input errors exit 1") {
  tst::TempDir tmp;
  tst::spit(tmp / "bad.ndjson", "{\"id\": \n");
  auto bad = tst::run_cli("review " + q(tmp / "bad.ndjson") + " --fixtures " + q(tst::fixture("worked_review/fixtures.ndjson")));
  CHECK(bad.exit_code == 1);
  CHECK_FALSE(bad.err.empty());
  auto missing = tst::run_cli("review " + q(tst::fixture("worked_review/paper.ndjson")) + " --fixtures " + q(tmp / "none.ndjson"));
  CHECK(missing.exit_code == 1);
  auto no_doc = tst::run_cli("review " + q(tmp / "absent.ndjson") + " --fixtures " + q(tst::fixture("worked_review/fixtures.ndjson")));
  CHECK(no_doc.exit_code == 1);
  CHECK(tst::run_cli("review").exit_code == 1);
  CHECK(tst::run_cli("frobnicate").exit_code == 1);
}

TEST_CASE("review with fixtures for another paper is an engine error") {
  tst::TempDir tmp;
  auto r = tst::run_cli("review " + q(tst::fixture("demo/corpus.ndjson")) + " --id H1 --fixtures " +
                        q(tst::fixture("worked_review/fixtures.ndjson")) + " --out " + q(tmp / "x"));
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("MissingFixture") != std::string::npos);
}

TEST_CASE("simulate runs the demo end to end, deterministically") {
  tst::TempDir a, b;
  auto r1 = tst::run_cli(demo_sim(a.path()));
  INFO(r1.err);
  REQUIRE(r1.exit_code == 0);
  auto r2 = tst::run_cli(demo_sim(b.path()));
  REQUIRE(r2.exit_code == 0);
  CHECK(r1.out == r2.out);
  auto ledger = read_ledger(a.path());
  CHECK(ledger.rounds.size() <= 6);
  CHECK(ledger.rounds.size() == 6);
  for (int k = 1; k <= 6; ++k) {
    auto name = "round-" + std::to_string(k) + ".ndjson";
    CHECK(tst::slurp(a / name) == tst::slurp(b / name));
  }
  for (const char* name : {"summary-round-1.csv", "population.csv", "scores_long.csv", "revision_deltas.csv", "report.txt"}) {
    CHECK_MESSAGE(std::filesystem::exists(a / name), name);
    CHECK(tst::slurp(a / name) == tst::slurp(b / name));
  }
  CHECK(r1.out.find("Final status: 8 accepted, 1 never accepted") != std::string::npos);
  CHECK(r1.out.find("never accepted: H5") != std::string::npos);
  auto meta = nlohmann::json::parse(tst::slurp(a / "run.json"));
  CHECK(meta["complete"] == true);
  CHECK(meta["config"]["seed"] == 7);

  auto capped = tst::run_cli(demo_sim(b / "capped") + " --max-rounds 2");
  CHECK(capped.exit_code == 0);
  CHECK(read_ledger(b / "capped").rounds.size() == 2);
}

TEST_CASE("simulate config errors exit 1") {
  tst::TempDir tmp;
  auto r = tst::run_cli(demo_sim(tmp.path()) + " --fixtures " + q(tmp / "missing.ndjson"));
  CHECK(r.exit_code == 1);
  CHECK_FALSE(std::filesystem::exists(tmp / "round-1.ndjson"));
  tst::spit(tmp / "bad.toml", "max_rounds = \"six\"\n");
  CHECK(tst::run_cli("simulate --config " + q(tmp / "bad.toml") + " --out " + q(tmp / "o")).exit_code == 1);
  CHECK(tst::run_cli("simulate --fixtures " + q(tst::fixture("demo/fixtures.ndjson")) + " --out " + q(tmp / "o")).exit_code == 1);
  auto http = tst::run_cli(demo_sim(tmp / "h") + " --backend http", "-u REVSIM_API_KEY -u REVSIM_API_BASE");
  CHECK(http.exit_code == 1);
  CHECK(http.err.find("REVSIM_API_KEY") != std::string::npos);
}

TEST_CASE("a missing fixture mid-run exits 2 and persists no partial round") {
  tst::TempDir tmp;
  // Round-1 responses only, plus the revision texts: round 2 revises, then
  // fails reviewing the first revised paper.
  auto first = tst::run_cli(demo_sim(tmp / "r1") + " --max-rounds 1 --record " + q(tmp / "round1.ndjson"));
  REQUIRE(first.exit_code == 0);
  std::string store = tst::slurp(tmp / "round1.ndjson");
  std::istringstream full(tst::slurp(tst::fixture("demo/fixtures.ndjson")));
  for (std::string line; std::getline(full, line);)
    if (line.find("This revision adds the analysis") != std::string::npos) store += line + "\n";
  tst::spit(tmp / "partial.ndjson", store);

  auto r = tst::run_cli(demo_sim(tmp / "run") + " --fixtures " + q(tmp / "partial.ndjson"));
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("MissingFixture") != std::string::npos);
  CHECK(std::filesystem::exists(tmp / "run" / "round-1.ndjson"));
  CHECK_FALSE(std::filesystem::exists(tmp / "run" / "round-2.ndjson"));
  auto meta = nlohmann::json::parse(tst::slurp(tmp / "run" / "run.json"));
  CHECK(meta["complete"] == false);
  CHECK(meta["rounds_completed"] == 1);
}

TEST_CASE("analyze correlate recovers the planted correlation") {
  auto r = tst::run_cli("analyze correlate --table " + q(tst::fixture("stats/planted_r08.csv")));
  REQUIRE(r.exit_code == 0);
  auto t = analysis::parse_csv(r.out);
  CHECK(t.header == std::vector<std::string>{"feature", "r", "p_value", "n"});
  bool found = false;
  for (const auto& row : t.rows)
    if (row[0] == "paper_length_words") {
      found = true;
      CHECK(std::abs(std::stod(row[1]) - 0.8) < 1e-9);
    }
  CHECK(found);
  tst::TempDir tmp;
  tst::spit(tmp / "bad.csv", "score,a\n1,2,3\n");
  CHECK(tst::run_cli("analyze correlate --table " + q(tmp / "bad.csv")).exit_code == 1);
  CHECK(tst::run_cli("analyze correlate --table " + q(tst::fixture("stats/planted_r08.csv")) + " --target nope").exit_code == 1);
}

TEST_CASE("analyze features and summary on the demo corpus") {
  tst::TempDir tmp;
  auto sim = tst::run_cli(demo_sim(tmp / "run"));
  REQUIRE(sim.exit_code == 0);
  auto r = tst::run_cli("analyze features --corpus " + q(tst::fixture("demo/corpus.ndjson")) + " --ledger " +
                        q(tmp / "run") + " --out " + q(tmp / "features.csv"));
  INFO(r.err);
  REQUIRE(r.exit_code == 0);
  auto rows = analysis::read_feature_csv(tst::slurp(tmp / "features.csv"));
  REQUIRE(rows.size() == 9);
  CHECK(analysis::parse_csv(tst::slurp(tmp / "features.csv")).header == analysis::feature_csv_header());
  for (const auto& row : rows) CHECK(row.score);

  auto nd = tst::run_cli("analyze features --format ndjson --corpus " + q(tst::fixture("demo/corpus.ndjson")));
  REQUIRE(nd.exit_code == 0);
  auto nrows = analysis::read_feature_ndjson(nd.out);
  REQUIRE(nrows.size() == 9);
  for (std::size_t i = 0; i < 9; ++i) CHECK(nrows[i].features == rows[i].features);

  auto s = tst::run_cli("analyze summary --table " + q(tmp / "features.csv"));
  REQUIRE(s.exit_code == 0);
  auto t = analysis::parse_csv(s.out);
  CHECK(t.column("Avg Score"));
  CHECK(t.column("Acc Rate"));
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0][0] == "human");
  CHECK(t.rows[1][0] == "llm");

  auto with_parses = tst::run_cli("analyze features --corpus " + q(tst::fixture("style/human.ndjson")) + " --parses " +
                                  q(tst::fixture("style/parses.ndjson")));
  REQUIRE(with_parses.exit_code == 0);
  for (const auto& row : analysis::read_feature_csv(with_parses.out)) CHECK(row.features.mean_dep_distance);

  auto adapter = tst::run_cli("analyze features --corpus " + q(tst::fixture("style/llm.ndjson")) + " --parse-adapter " +
                              q(REVSIM_PYTHON) + " " + q(std::string(REVSIM_STUB_DIR) + "/parse_adapter_stub.py"));
  INFO(adapter.err);
  REQUIRE(adapter.exit_code == 0);
  for (const auto& row : analysis::read_feature_csv(adapter.out)) CHECK(row.features.subclause_ratio);
}

TEST_CASE("analyze ttest on a table and on a run") {
  tst::TempDir tmp;
  tst::spit(tmp / "pairs.csv", "before,after\n5,6\n6,6\n");
  auto r = tst::run_cli("analyze ttest --table " + q(tmp / "pairs.csv") + " --before before --after after");
  REQUIRE(r.exit_code == 0);
  auto t = analysis::parse_csv(r.out);
  REQUIRE(t.rows.size() == 1);
  CHECK(std::stod(t.rows[0][*t.column("t")]) == doctest::Approx(1.0));
  CHECK(std::stod(t.rows[0][*t.column("p_value")]) == doctest::Approx(0.5).epsilon(1e-9));

  tst::spit(tmp / "flat.csv", "before,after\n5,6\n5,6\n5,6\n");
  CHECK(tst::run_cli("analyze ttest --table " + q(tmp / "flat.csv") + " --before before --after after").exit_code == 2);
  CHECK(tst::run_cli("analyze ttest --table " + q(tmp / "pairs.csv")).exit_code == 1);
  CHECK(tst::run_cli("analyze ttest").exit_code == 1);

  REQUIRE(tst::run_cli(demo_sim(tmp / "run")).exit_code == 0);
  auto l = tst::run_cli("analyze ttest --ledger " + q(tmp / "run") + " --from-round 1");
  REQUIRE(l.exit_code == 0);
  auto lt = analysis::parse_csv(l.out);
  REQUIRE(lt.rows.size() == 3);
  CHECK(lt.rows[2][0] == "all");
  CHECK(lt.rows[2][*lt.column("n")] == "6");
}

TEST_CASE("analyze polish emits one row per ratio") {
  auto args = "analyze polish --doc " + q(tst::fixture("polish/base.ndjson")) + " --fixtures " +
              q(tst::fixture("polish/fixtures.ndjson"));
  auto r = tst::run_cli(args);
  INFO(r.err);
  REQUIRE(r.exit_code == 0);
  auto t = analysis::parse_csv(r.out);
  REQUIRE(t.rows.size() == 6);
  std::vector<std::string> ratios;
  for (const auto& row : t.rows) ratios.push_back(row[0]);
  CHECK(ratios == std::vector<std::string>{"0", "0.2", "0.4", "0.6", "0.8", "1"});
  CHECK(tst::run_cli(args).out == r.out);
  auto longf = tst::run_cli(args + " --long --ratios 0,0.5");
  REQUIRE(longf.exit_code == 0);
  CHECK(analysis::parse_csv(longf.out).header == std::vector<std::string>{"ratio", "feature", "value"});
  CHECK(tst::run_cli(args + " --ratios 0,abc").exit_code == 1);
}

TEST_CASE("report re-renders a finished run") {
  tst::TempDir tmp;
  auto sim = tst::run_cli(demo_sim(tmp / "run"));
  REQUIRE(sim.exit_code == 0);
  auto rep = tst::run_cli("report --run " + q(tmp / "run"));
  REQUIRE(rep.exit_code == 0);
  CHECK(rep.out == sim.out);
  CHECK(rep.out.find("Avg Score") != std::string::npos);
  CHECK(tst::run_cli("report --run " + q(tmp / "nothing")).exit_code == 1);
}

TEST_CASE("draft without matching fixtures is an engine error") {
  auto r = tst::run_cli("draft --keywords quantum,knitting --fixtures " + q(tst::fixture("demo/fixtures.ndjson")));
  CHECK(r.exit_code == 2);
  CHECK(tst::run_cli("draft --fixtures " + q(tst::fixture("demo/fixtures.ndjson"))).exit_code == 1);
}

TEST_CASE("environment overrides reach the CLI") {
  tst::TempDir tmp;
  auto r = tst::run_cli("simulate --config " + q(tst::fixture("demo/demo.toml")),
                        "REVSIM_OUTPUT=" + q(tmp / "env-out") + " REVSIM_MAX_ROUNDS=1");
  INFO(r.err);
  REQUIRE(r.exit_code == 0);
  CHECK(read_ledger(tmp / "env-out").rounds.size() == 1);
}
