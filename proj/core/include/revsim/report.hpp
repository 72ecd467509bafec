#pragma once

#include <optional>
#include <string>
#include <vector>

#include "revsim/analysis/stats.hpp"
#include "revsim/simulator.hpp"

namespace revsim {

struct PopulationRow {
  int round = 1;
  std::size_t human_submitted = 0;
  std::size_t llm_submitted = 0;
  std::size_t human_accepted = 0;
  std::size_t llm_accepted = 0;
};

// Submissions and acceptances per round and authorship.
std::vector<PopulationRow> population(const RunLedger& ledger);

struct RevisionDelta {
  std::string group;  // "human", "llm" or "all"
  int from_round = 1;
  std::size_t n = 0;
  std::optional<double> mean_before;
  std::optional<double> mean_after;
  // Paired t-test over (before, after); absent with fewer than two pairs or
  // when every pair moved by the same non-zero amount.
  std::optional<analysis::StatResult> test;
  std::string note;
};

/// Average scores of papers rejected at `from_round` against their revisions
/// in the next round.
std::vector<RevisionDelta> revision_deltas(const RunLedger& ledger, int from_round = 1);

std::string population_csv(const std::vector<PopulationRow>& rows);
std::string revision_deltas_csv(const std::vector<RevisionDelta>& rows);
// Long format (round, paper_id, root_id, authorship, average, accepted) for plotting.
std::string scores_long_csv(const RunLedger& ledger);

// Human-readable run report.
std::string render_report(const RunLedger& ledger);

}  // namespace revsim
