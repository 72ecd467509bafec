#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "revsim/docmodel.hpp"
#include "revsim/research_engine.hpp"
#include "revsim/review_engine.hpp"

namespace revsim {

inline constexpr int kDefaultMaxRounds = 6;

struct RoundEntry {
  std::string paper_id;  // id of the submitted revision
  std::string root_id;   // id of the original submission
  Authorship authorship = Authorship::human;
  PaperDoc submitted;
  review::ReviewBundle bundle;
  review::Decision decision;

  bool operator==(const RoundEntry&) const = default;
};

struct RoundRecord {
  int round = 1;
  std::vector<RoundEntry> entries;

  bool operator==(const RoundRecord&) const = default;
};

enum class FinalState { accepted, never_accepted, frozen };

std::string_view to_string(FinalState s);

struct FinalStatus {
  FinalState state = FinalState::never_accepted;
  std::optional<int> accepted_at_round;
  // Round of the last review; for frozen papers, the round they left the run.
  int last_round = 1;

  bool operator==(const FinalStatus&) const = default;
};

struct RunLedger {
  nlohmann::json config = nlohmann::json::object();
  std::vector<RoundRecord> rounds;
  // Keyed by the original submission id.
  std::map<std::string, FinalStatus> final_status;

  const RoundRecord* find_round(int round) const;
};

class SimulationError : public Error {
 public:
  enum class Kind { missing_round, ledger_invariant, resume_mismatch };

  SimulationError(Kind kind, std::string message) : Error(std::move(message)), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct Engines {
  const review::ReviewEngine& review;
  const research::ResearchEngine& research;
};

struct SimulationOptions {
  int max_rounds = kDefaultMaxRounds;
  // Papers reviewed (and revised) at once within a round.
  std::size_t concurrency = 4;
  // Original ids whose source cannot be revised: reviewed in round 1, then
  // excluded from later rounds.
  std::set<std::string> frozen_ids;
  // When set, each completed round is flushed here and an existing run in
  // the directory is resumed at its last completed round.
  std::optional<std::filesystem::path> run_dir;
  nlohmann::json config_snapshot = nlohmann::json::object();
  // Called after each completed round.
  std::function<void(const RoundRecord&)> on_round;
};

/// Reviews every submission; entries keep submission order. Nothing is
/// returned if any paper fails.
RoundRecord run_round(std::span<const PaperDoc> submissions, const review::ReviewEngine& engine, int round,
                      std::size_t concurrency = 4);

/// Round 1 reviews the corpus; each later round reviews revise(p, bundle)
/// for every paper rejected in the round before, until none remain or
/// max_rounds is reached.
RunLedger run_simulation(std::span<const PaperDoc> corpus, const Engines& engines, const SimulationOptions& options = {});

// Rebuilds final_status from the rounds.
std::map<std::string, FinalStatus> compute_final_status(const std::vector<RoundRecord>& rounds,
                                                        const std::set<std::string>& frozen_ids, int max_rounds);

// Throws SimulationError(ledger_invariant) when the ledger breaks its rules.
void validate(const RunLedger& ledger);

// Run directory layout: round-<r>.ndjson with one entry per line, plus run.json.
void write_round(const std::filesystem::path& run_dir, const RoundRecord& record);
void write_run_meta(const std::filesystem::path& run_dir, const RunLedger& ledger, bool complete);
RunLedger read_ledger(const std::filesystem::path& run_dir);

void to_json(nlohmann::json& j, const RoundEntry& e);
void from_json(const nlohmann::json& j, RoundEntry& e);
void to_json(nlohmann::json& j, const FinalStatus& s);
void from_json(const nlohmann::json& j, FinalStatus& s);

struct AuthorshipSummary {
  std::size_t submitted = 0;
  std::size_t accepted = 0;
  std::optional<double> avg_score;
  std::optional<double> acc_rate;
};

struct WinRates {
  std::size_t pairs = 0;
  double human = 0;
  double llm = 0;
  double tie = 0;
};

struct RoundSummary {
  int round = 1;
  AuthorshipSummary human;
  AuthorshipSummary llm;
  // Absent when no keyword-matched human/llm pair was submitted this round.
  std::optional<WinRates> win_rates;
};

/// Per-authorship mean score and acceptance rate for one round, plus
/// head-to-head results over human/llm papers with identical keyword sets.
RoundSummary summarize(const RunLedger& ledger, int round);

// Avg Score / Win Rate / Acc Rate table, one row per authorship.
std::string format_summary_table(const RoundSummary& s);
std::string summary_csv(const RoundSummary& s);

}  // namespace revsim
