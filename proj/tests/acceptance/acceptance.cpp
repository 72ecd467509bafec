// Prints one PASS/FAIL line per primary acceptance criterion; exits 1 on any FAIL.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "generators.hpp"
#include "oracles.hpp"
#include "revsim/analysis/error.hpp"
#include "revsim/analysis/features.hpp"
#include "revsim/analysis/stats.hpp"
#include "revsim/analysis/syntax.hpp"
#include "revsim/analysis/text.hpp"
#include "revsim/research_engine.hpp"
#include "revsim/review_engine.hpp"
#include "revsim/simulator.hpp"
#include "test_support.hpp"

using namespace revsim;
namespace tst = revsim::testing;

namespace {

// Collects failed expectations for one criterion.
struct Check {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string q(const std::filesystem::path& p) { return tst::shell_quote(p.string()); }

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

void worked_review_replay(Check& c) {
  auto doc = read_corpus(tst::fixture("worked_review/paper.ndjson")).at(0);
  auto store = llm::ScriptedBackend::from_file(tst::fixture("worked_review/fixtures.ndjson"));
  llm::CountingBackend counter(store);
  review::ReviewEngine engine(counter, PromptSet::defaults());
  auto d = review::aggregate(engine.run_review(doc));
  c.expect(counter.total() == 10, "backend calls = " + std::to_string(counter.total()));
  c.expect(std::abs(d.average.value() - 36.0 / 7.0) < 1e-9, "average = " + fmt(d.average.value()));
  c.expect(d.sum == 36 && d.count == 7, "sum/count = " + std::to_string(d.sum) + "/" + std::to_string(d.count));
  c.expect(!d.accepted, "decision is ACCEPT");

  tst::TempDir tmp;
  auto r = tst::run_cli("review " + q(tst::fixture("worked_review/paper.ndjson")) + " --fixtures " +
                        q(tst::fixture("worked_review/fixtures.ndjson")) + " --out " + q(tmp / "bundle.ndjson"));
  c.expect(r.exit_code == 0, "revsim review exit " + std::to_string(r.exit_code));
  c.expect(contains(r.out, "Average Score: (6 + 4 + 5 + 6 + 5 + 5 + 5)/7 = 5.14"), "CLI average line missing");
  c.expect(contains(r.out, "Decision: REJECT"), "CLI decision line missing");
}

void threshold_boundary(Check& c) {
  std::vector<int> sixes(7, 6);
  c.expect(review::decide(sixes).accepted, "seven 6s rejected");
  for (std::size_t i = 0; i < 7; ++i) {
    auto one = sixes;
    one[i] = 5;
    c.expect(!review::decide(one).accepted, "one 5 at position " + std::to_string(i) + " accepted");
  }
  tst::TempDir tmp;
  auto a = tst::run_cli("review " + q(tst::fixture("worked_review/paper.ndjson")) + " --fixtures " +
                        q(tst::fixture("worked_review/all_sixes.ndjson")) + " --out " + q(tmp / "a"));
  c.expect(contains(a.out, "Decision: ACCEPT"), "replayed all-6 review not accepted");
  auto b = tst::run_cli("review " + q(tst::fixture("worked_review/paper.ndjson")) + " --fixtures " +
                        q(tst::fixture("worked_review/one_five.ndjson")) + " --out " + q(tmp / "b"));
  c.expect(contains(b.out, "Decision: REJECT"), "replayed one-5 review not rejected");
}

void simulation_control(Check& c) {
  auto corpus = read_corpus(tst::fixture("demo/corpus.ndjson"));
  auto store = llm::ScriptedBackend::from_file(tst::fixture("demo/fixtures.ndjson"));
  review::ReviewEngine reviewer(store, PromptSet::defaults());
  research::ResearchEngine researcher(store, PromptSet::defaults());
  auto ledger = run_simulation(corpus, Engines{reviewer, researcher});
  c.expect(!ledger.rounds.empty() && ledger.rounds.size() <= 6, "rounds = " + std::to_string(ledger.rounds.size()));

  std::set<std::string> prev_rejected;
  for (const auto& d : corpus) prev_rejected.insert(d.id);
  for (const auto& r : ledger.rounds) {
    std::set<std::string> submitted, rejected;
    for (const auto& e : r.entries) {
      submitted.insert(e.root_id);
      if (!e.decision.accepted) rejected.insert(e.root_id);
    }
    c.expect(submitted == prev_rejected, "round " + std::to_string(r.round) + " submissions differ from prior rejections");
    c.expect(rejected.size() <= prev_rejected.size(), "rejected set grew in round " + std::to_string(r.round));
    prev_rejected = rejected;
  }

  std::size_t never_human = 0;
  for (const auto& d : corpus) {
    const auto& s = ledger.final_status.at(d.id);
    if (d.authorship == Authorship::llm)
      c.expect(s.accepted_at_round && *s.accepted_at_round <= 3, d.id + " not accepted by round 3");
    else if (s.state == FinalState::never_accepted)
      ++never_human;
  }
  c.expect(never_human == 1, "human papers never accepted = " + std::to_string(never_human));
}

void diversity_oracle(Check& c) {
  gen::Gen g(101);
  for (int trial = 0; trial < 50; ++trial) {
    auto toks = g.tokens(g.size(10, 2000), g.size(2, 300));
    for (std::size_t n = 1; n <= 3; ++n) {
      const double got = analysis::ngram_diversity(toks, n), want = oracle::ngram_diversity(toks, n);
      c.expect(got == want, "trial " + std::to_string(trial) + " n=" + std::to_string(n) + ": " + fmt(got) + " vs " +
                                fmt(want));
    }
  }
}

void correlation_oracle(Check& c) {
  gen::Gen g(102);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = g.size(3, 100);
    const double w = g.real(-1, 1);
    auto xs = g.reals(n, -10, 10);
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = w * xs[i] + (1 - std::abs(w)) * g.real(-10, 10) + 3;
    auto res = analysis::pearson(xs, ys);
    const double r = oracle::pearson_r(xs, ys);
    const double df = static_cast<double>(n - 2);
    const double p = oracle::t_two_sided(r * std::sqrt(df / (1 - r * r)), df);
    c.expect(std::abs(res.statistic - r) < 1e-9, "trial " + std::to_string(trial) + " r " + fmt(res.statistic));
    c.expect(std::abs(res.p_value - p) < 1e-6, "trial " + std::to_string(trial) + " p " + fmt(res.p_value));
  }
  auto table = analysis::parse_csv(tst::slurp(tst::fixture("stats/planted_r08.csv")));
  const auto xi = table.column("paper_length_words"), yi = table.column("score");
  if (!xi || !yi) {
    c.expect(false, "planted dataset columns missing");
    return;
  }
  std::vector<double> xs, ys;
  for (const auto& row : table.rows) {
    xs.push_back(std::stod(row[*xi]));
    ys.push_back(std::stod(row[*yi]));
  }
  const double r = analysis::pearson(xs, ys).statistic;
  c.expect(std::abs(r - 0.8) < 1e-9, "planted r = " + fmt(r));
}

void ttest_oracle(Check& c) {
  gen::Gen g(103);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = g.size(2, 120);
    auto before = g.reals(n, 1, 10);
    std::vector<double> after(n);
    const double shift = g.real(-1, 1);
    for (std::size_t i = 0; i < n; ++i) after[i] = before[i] + shift + g.real(-1, 1);
    auto res = analysis::paired_t(before, after);
    auto o = oracle::paired_t(before, after);
    c.expect(std::abs(res.statistic - o.t) < 1e-9,
             "trial " + std::to_string(trial) + " t " + fmt(res.statistic) + " vs " + fmt(o.t));
    c.expect(res.df && *res.df == o.df, "trial " + std::to_string(trial) + " df");
    c.expect(std::abs(res.p_value - oracle::t_two_sided(o.t, o.df)) < 1e-6, "trial " + std::to_string(trial) + " p");
  }
  std::vector<double> fives{5, 5, 5}, sixes{6, 6, 6};
  bool raised = false;
  try {
    analysis::paired_t(fives, sixes);
  } catch (const analysis::AnalysisError& e) {
    raised = e.kind() == analysis::AnalysisError::Kind::degenerate_variance;
  }
  c.expect(raised, "constant non-zero differences did not raise degenerate_variance");
}

void fkg_dep_fixtures(Check& c) {
  auto doc = analysis::segment(tst::slurp(tst::fixture("text/fkg_ten_monosyllables.txt")));
  const double f = analysis::fkg(doc);
  c.expect(std::abs(f - 0.11) < 1e-9, "fkg = " + fmt(f));
  auto fx = analysis::read_parse_fixtures(tst::fixture("text/dep_parses.ndjson"));
  const std::vector<std::pair<std::string, double>> want{{"pair", 1.0}, {"chain", 1.0}, {"fork", 1.5}};
  for (const auto& [id, v] : want) {
    auto it = fx.find(id);
    if (it == fx.end()) {
      c.expect(false, "parse fixture " + id + " missing");
      continue;
    }
    const double d = analysis::mean_dep_distance(it->second);
    c.expect(d == v, id + " mean_dep_distance = " + fmt(d));
  }
}

void direction_suite(Check& c) {
  const auto fx = analysis::FeatureExtractor::with_defaults();
  auto parses = analysis::read_parse_fixtures(tst::fixture("style/parses.ndjson"));
  auto mean_features = [&](const std::string& rel) {
    auto docs = read_corpus(tst::fixture(rel));
    c.expect(docs.size() >= 20, rel + " has " + std::to_string(docs.size()) + " docs");
    std::map<std::string, double> sum;
    for (const auto& d : docs) {
      auto it = parses.find(d.id);
      auto f = fx.extract(d, it == parses.end() ? nullptr : &it->second);
      for (const auto& name : analysis::FeatureVector::names())
        if (auto v = f.get(name)) sum[name] += *v / static_cast<double>(docs.size());
    }
    return sum;
  };
  auto h = mean_features("style/human.ndjson"), l = mean_features("style/llm.ndjson");
  for (const char* name : {"diversity_1", "diversity_2", "diversity_3", "fkg"})
    c.expect(l[name] > h[name], std::string("llm not higher on ") + name);
  for (const char* name : {"avg_sentence_length", "avg_paragraph_length", "subclause_ratio"})
    c.expect(l[name] < h[name], std::string("llm not lower on ") + name);

  auto docs = read_corpus(tst::fixture("negkw/corpus.ndjson"));
  auto table = analysis::parse_csv(tst::slurp(tst::fixture("negkw/scores.csv")));
  const auto score = table.column("score");
  if (!score || table.rows.size() != docs.size()) {
    c.expect(false, "negative-keyword score table does not match the corpus");
    return;
  }
  std::vector<double> counts, scores;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    counts.push_back(static_cast<double>(fx.extract(docs[i]).neg_keyword_count));
    scores.push_back(std::stod(table.rows[i][*score]));
  }
  const double r = analysis::pearson(counts, scores).statistic;
  c.expect(r < 0, "neg_keyword_count vs score r = " + fmt(r));
}

void polish_determinism(Check& c) {
  auto base = read_corpus(tst::fixture("polish/base.ndjson")).at(0);
  auto store = llm::ScriptedBackend::from_file(tst::fixture("polish/fixtures.ndjson"));
  research::ResearchEngine engine(store, PromptSet::defaults());
  c.expect(base.paragraph_count() == 10, "base has " + std::to_string(base.paragraph_count()) + " paragraphs");
  auto flat = [](const PaperDoc& d) {
    std::vector<std::string> out;
    for (const auto& s : d.sections)
      for (const auto& p : s.paragraphs) out.push_back(p);
    return out;
  };
  const research::PolishSpec spec{0.4, 20241014};
  auto a = engine.polish(base, spec), b = engine.polish(base, spec);
  auto before = flat(base), after = flat(a);
  std::vector<std::size_t> changed;
  for (std::size_t i = 0; i < before.size() && i < after.size(); ++i)
    if (before[i] != after[i]) changed.push_back(i);
  c.expect(changed.size() == 4, "rewritten paragraphs = " + std::to_string(changed.size()));
  c.expect(changed == research::polish_selection(10, 0.4, spec.seed), "rewritten set differs from the selection");
  c.expect(to_ndjson_line(a) == to_ndjson_line(b), "two runs differ");
  auto zero = engine.polish(base, {0.0, spec.seed});
  c.expect(to_ndjson_line(zero) == to_ndjson_line(base), "ratio 0 output differs from input");
}

struct Criterion {
  const char* name;
  std::function<void(Check&)> run;
  double budget_s;  // 0 means no runtime bound
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"worked-review-replay", worked_review_replay, 1.0},
      {"threshold-boundary", threshold_boundary, 0},
      {"simulation-control", simulation_control, 10.0},
      {"diversity-oracle", diversity_oracle, 0},
      {"correlation-oracle", correlation_oracle, 0},
      {"t-test-oracle", ttest_oracle, 0},
      {"fkg-dep-distance-fixtures", fkg_dep_fixtures, 0},
      {"direction-suite", direction_suite, 30.0},
      {"polish-determinism", polish_determinism, 0},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.budget_s > 0 && secs >= cr.budget_s) c.failures.push_back("runtime " + fmt(secs) + " s over budget");
    const bool ok = c.failures.empty();
    if (!ok) ++failed;
    std::printf("%s %-28s %8.3f s", ok ? "PASS" : "FAIL", cr.name, secs);
    if (!ok) {
      std::printf("  %s", c.failures.front().c_str());
      if (c.failures.size() > 1) std::printf(" (+%zu more)", c.failures.size() - 1);
    }
    std::printf("\n");
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed ? 1 : 0;
}
