#include "revsim/report.hpp"

#include <cstdio>
#include <map>

#include "revsim/analysis/features.hpp"

namespace revsim {

namespace {

std::string num(std::optional<double> v) { return v ? analysis::format_number(*v) : ""; }

std::string fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sig(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

}  // namespace

std::vector<PopulationRow> population(const RunLedger& ledger) {
  std::vector<PopulationRow> out;
  for (const auto& r : ledger.rounds) {
    PopulationRow row{r.round, 0, 0, 0, 0};
    for (const auto& e : r.entries) {
      bool human = e.authorship == Authorship::human;
      (human ? row.human_submitted : row.llm_submitted) += 1;
      if (e.decision.accepted) (human ? row.human_accepted : row.llm_accepted) += 1;
    }
    out.push_back(row);
  }
  return out;
}

std::vector<RevisionDelta> revision_deltas(const RunLedger& ledger, int from_round) {
  const RoundRecord* before = ledger.find_round(from_round);
  if (!before)
    throw SimulationError(SimulationError::Kind::missing_round, "MissingRound(" + std::to_string(from_round) + ")");
  const RoundRecord* after = ledger.find_round(from_round + 1);
  std::map<std::string, const RoundEntry*> next;
  if (after)
    for (const auto& e : after->entries) next[e.root_id] = &e;

  std::vector<RevisionDelta> out;
  for (const char* group : {"human", "llm", "all"}) {
    std::vector<double> xs, ys;
    for (const auto& e : before->entries) {
      if (e.decision.accepted) continue;
      if (std::string_view(group) != "all" && to_string(e.authorship) != group) continue;
      auto it = next.find(e.root_id);
      if (it == next.end()) continue;
      xs.push_back(e.decision.average.value());
      ys.push_back(it->second->decision.average.value());
    }
    RevisionDelta d;
    d.group = group;
    d.from_round = from_round;
    d.n = xs.size();
    if (!xs.empty()) {
      d.mean_before = analysis::summary_stats(xs).mean;
      d.mean_after = analysis::summary_stats(ys).mean;
    }
    try {
      d.test = analysis::paired_t(xs, ys);
    } catch (const analysis::AnalysisError& e) {
      d.note = e.what();
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::string population_csv(const std::vector<PopulationRow>& rows) {
  std::string out = "round,human_submitted,llm_submitted,human_accepted,llm_accepted\n";
  for (const auto& r : rows)
    out += std::to_string(r.round) + "," + std::to_string(r.human_submitted) + "," + std::to_string(r.llm_submitted) +
           "," + std::to_string(r.human_accepted) + "," + std::to_string(r.llm_accepted) + "\n";
  return out;
}

std::string revision_deltas_csv(const std::vector<RevisionDelta>& rows) {
  std::string out = "group,from_round,n,mean_before,mean_after,delta,t,p_value,df,note\n";
  for (const auto& r : rows) {
    std::optional<double> delta;
    if (r.mean_before && r.mean_after) delta = *r.mean_after - *r.mean_before;
    out += r.group + "," + std::to_string(r.from_round) + "," + std::to_string(r.n) + "," + num(r.mean_before) + "," +
           num(r.mean_after) + "," + num(delta) + "," + (r.test ? num(r.test->statistic) : "") + "," +
           (r.test ? num(r.test->p_value) : "") + "," + (r.test ? num(r.test->df) : "") + "," +
           analysis::csv_escape(r.note) + "\n";
  }
  return out;
}

std::string scores_long_csv(const RunLedger& ledger) {
  std::string out = "round,paper_id,root_id,authorship,average,accepted\n";
  for (const auto& r : ledger.rounds)
    for (const auto& e : r.entries)
      out += std::to_string(r.round) + "," + analysis::csv_escape(e.paper_id) + "," + analysis::csv_escape(e.root_id) +
             "," + std::string(to_string(e.authorship)) + "," + analysis::format_number(e.decision.average.value()) +
             "," + (e.decision.accepted ? "true" : "false") + "\n";
  return out;
}

std::string render_report(const RunLedger& ledger) {
  std::string out;
  out += "Rounds run: " + std::to_string(ledger.rounds.size()) + "\n\n";
  if (!ledger.rounds.empty()) {
    out += "Round 1\n" + format_summary_table(summarize(ledger, 1)) + "\n";
  }
  out += "Population per round (submitted / accepted)\n";
  out += "round  human     llm\n";
  for (const auto& p : population(ledger)) {
    char line[96];
    std::snprintf(line, sizeof line, "%5d  %3zu/%-3zu  %3zu/%-3zu\n", p.round, p.human_submitted, p.human_accepted,
                  p.llm_submitted, p.llm_accepted);
    out += line;
  }
  if (ledger.rounds.size() >= 2) {
    out += "\nFirst revision against original (rejected in round 1)\n";
    for (const auto& d : revision_deltas(ledger, 1)) {
      out += "  " + d.group + ": n=" + std::to_string(d.n);
      if (d.mean_before && d.mean_after)
        out += " original " + fixed(*d.mean_before, 4) + " -> revision " + fixed(*d.mean_after, 4);
      if (d.test) out += ", t=" + fixed(d.test->statistic, 4) + ", p=" + sig(d.test->p_value, 4);
      else if (!d.note.empty()) out += " (" + d.note + ")";
      out += "\n";
    }
  }
  std::size_t accepted = 0, never = 0, frozen = 0;
  for (const auto& [id, s] : ledger.final_status) {
    if (s.state == FinalState::accepted) ++accepted;
    else if (s.state == FinalState::frozen) ++frozen;
    else ++never;
  }
  out += "\nFinal status: " + std::to_string(accepted) + " accepted, " + std::to_string(never) + " never accepted, " +
         std::to_string(frozen) + " frozen\n";
  for (const auto& [id, s] : ledger.final_status)
    if (s.state == FinalState::never_accepted) out += "  never accepted: " + id + "\n";
  return out;
}

}  // namespace revsim
