#include "revsim/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <thread>

#include "io.hpp"

namespace revsim {

namespace {

// Runs fn(i) for i in [0, n) on up to `width` threads. Results keep index
// order; when several calls fail, the lowest index's error is rethrown.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, std::size_t width, Fn fn) {
  std::vector<std::optional<T>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  width = std::clamp<std::size_t>(width, 1, std::max<std::size_t>(n, 1));
  if (width == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < width; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<T> out;
  out.reserve(n);
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

std::filesystem::path round_path(const std::filesystem::path& dir, int round) {
  return dir / ("round-" + std::to_string(round) + ".ndjson");
}

std::vector<std::string> keyword_set(const PaperDoc& doc) {
  std::vector<std::string> k;
  for (const auto& w : doc.keywords) k.push_back(detail::to_lower(detail::trim(w)));
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  return k;
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.0f%%", v * 100.0);
  return buf;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string_view to_string(FinalState s) {
  switch (s) {
    case FinalState::accepted: return "accepted";
    case FinalState::never_accepted: return "never_accepted";
    case FinalState::frozen: return "frozen";
  }
  return "never_accepted";
}

const RoundRecord* RunLedger::find_round(int round) const {
  for (const auto& r : rounds)
    if (r.round == round) return &r;
  return nullptr;
}

RoundRecord run_round(std::span<const PaperDoc> submissions, const review::ReviewEngine& engine, int round,
                      std::size_t concurrency) {
  if (submissions.empty()) throw PreconditionError("run_round needs at least one submission");
  if (round < 1) throw PreconditionError("round numbers start at 1");
  auto entries = parallel_map<RoundEntry>(submissions.size(), concurrency, [&](std::size_t i) {
    const auto& doc = submissions[i];
    auto bundle = engine.run_review(doc);
    auto decision = review::aggregate(bundle);
    return RoundEntry{doc.id, lineage_root_id(doc.id), doc.authorship, doc, std::move(bundle), decision};
  });
  return RoundRecord{round, std::move(entries)};
}

std::map<std::string, FinalStatus> compute_final_status(const std::vector<RoundRecord>& rounds,
                                                        const std::set<std::string>& frozen_ids, int max_rounds) {
  std::map<std::string, FinalStatus> out;
  for (const auto& record : rounds) {
    for (const auto& e : record.entries) {
      auto& s = out[e.root_id];
      s.last_round = record.round;
      if (e.decision.accepted) {
        s.state = FinalState::accepted;
        s.accepted_at_round = record.round;
      } else if (frozen_ids.count(e.root_id) && record.round < max_rounds) {
        s.state = FinalState::frozen;
      } else {
        s.state = FinalState::never_accepted;
      }
    }
  }
  return out;
}

void validate(const RunLedger& ledger) {
  auto bad = [](const std::string& why) { throw SimulationError(SimulationError::Kind::ledger_invariant, why); };
  std::map<std::string, const RoundEntry*> previous;
  std::set<std::string> accepted;
  for (std::size_t i = 0; i < ledger.rounds.size(); ++i) {
    const auto& r = ledger.rounds[i];
    if (r.round != static_cast<int>(i) + 1) bad("round numbers must run 1, 2, ... without gaps");
    if (r.entries.empty()) bad("round " + std::to_string(r.round) + " has no entries");
    std::map<std::string, const RoundEntry*> current;
    for (const auto& e : r.entries) {
      if (!current.emplace(e.root_id, &e).second) bad("paper " + e.root_id + " submitted twice in one round");
      if (accepted.count(e.root_id)) bad("paper " + e.root_id + " reappears after acceptance");
      if (e.decision != review::aggregate(e.bundle)) bad("decision of " + e.paper_id + " does not match its reviews");
      if (e.paper_id != e.submitted.id || e.bundle.paper_id != e.paper_id) bad("entry ids disagree for " + e.paper_id);
      if (i > 0) {
        auto prev = previous.find(e.root_id);
        if (prev == previous.end() || prev->second->decision.accepted)
          bad("paper " + e.root_id + " in round " + std::to_string(r.round) + " was not rejected the round before");
        if (e.submitted.parent_id != prev->second->paper_id)
          bad("revision " + e.paper_id + " does not descend from " + prev->second->paper_id);
      }
    }
    for (const auto& e : r.entries)
      if (e.decision.accepted) accepted.insert(e.root_id);
    previous = std::move(current);
  }
}

void to_json(nlohmann::json& j, const RoundEntry& e) {
  j = nlohmann::json{{"paper_id", e.paper_id},
                     {"root_id", e.root_id},
                     {"authorship", to_string(e.authorship)},
                     {"submitted", e.submitted},
                     {"bundle", e.bundle},
                     {"decision", e.decision}};
}

void from_json(const nlohmann::json& j, RoundEntry& e) {
  e.paper_id = j.at("paper_id").get<std::string>();
  e.root_id = j.at("root_id").get<std::string>();
  e.authorship = authorship_from_string(j.at("authorship").get<std::string>());
  e.submitted = j.at("submitted").get<PaperDoc>();
  e.bundle = j.at("bundle").get<review::ReviewBundle>();
  e.decision = j.at("decision").get<review::Decision>();
}

void to_json(nlohmann::json& j, const FinalStatus& s) {
  j = nlohmann::json{{"state", to_string(s.state)}, {"last_round", s.last_round}};
  j["accepted_at_round"] = s.accepted_at_round ? nlohmann::json(*s.accepted_at_round) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, FinalStatus& s) {
  auto state = j.at("state").get<std::string>();
  if (state == "accepted") s.state = FinalState::accepted;
  else if (state == "frozen") s.state = FinalState::frozen;
  else if (state == "never_accepted") s.state = FinalState::never_accepted;
  else throw SimulationError(SimulationError::Kind::ledger_invariant, "unknown final state " + state);
  s.last_round = j.at("last_round").get<int>();
  const auto& a = j.at("accepted_at_round");
  s.accepted_at_round = a.is_null() ? std::nullopt : std::optional<int>(a.get<int>());
}

void write_round(const std::filesystem::path& run_dir, const RoundRecord& record) {
  std::string text;
  for (const auto& e : record.entries) {
    text += nlohmann::json(e).dump();
    text += '\n';
  }
  detail::write_file_atomic(round_path(run_dir, record.round), text);
}

void write_run_meta(const std::filesystem::path& run_dir, const RunLedger& ledger, bool complete) {
  nlohmann::json meta{{"config", ledger.config},
                      {"rounds_completed", ledger.rounds.size()},
                      {"complete", complete}};
  if (complete) {
    nlohmann::json status = nlohmann::json::object();
    for (const auto& [id, s] : ledger.final_status) status[id] = s;
    meta["final_status"] = std::move(status);
  }
  detail::write_file_atomic(run_dir / "run.json", meta.dump(2) + "\n");
}

RunLedger read_ledger(const std::filesystem::path& run_dir) {
  RunLedger ledger;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(detail::read_file(run_dir / "run.json"));
  } catch (const nlohmann::json::exception& e) {
    throw SimulationError(SimulationError::Kind::ledger_invariant, std::string("run.json: ") + e.what());
  }
  ledger.config = meta.value("config", nlohmann::json::object());
  const auto completed = meta.value("rounds_completed", std::size_t{0});
  for (std::size_t r = 1; r <= completed; ++r) {
    RoundRecord record{static_cast<int>(r), {}};
    auto path = round_path(run_dir, static_cast<int>(r));
    std::size_t line_no = 0;
    const auto text = detail::read_file(path);
    for (auto line : detail::split_lines(text)) {
      ++line_no;
      if (detail::trim(line).empty()) continue;
      try {
        record.entries.push_back(nlohmann::json::parse(line).get<RoundEntry>());
      } catch (const std::exception& e) {
        throw SimulationError(SimulationError::Kind::ledger_invariant,
                              path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    ledger.rounds.push_back(std::move(record));
  }
  if (meta.contains("final_status"))
    for (const auto& [id, s] : meta["final_status"].items()) ledger.final_status[id] = s.get<FinalStatus>();
  validate(ledger);
  return ledger;
}

RunLedger run_simulation(std::span<const PaperDoc> corpus, const Engines& engines, const SimulationOptions& options) {
  if (options.max_rounds < 1) throw PreconditionError("max_rounds must be at least 1");
  if (corpus.empty()) throw PreconditionError("the corpus is empty");
  std::set<std::string> ids;
  for (const auto& d : corpus) {
    validate(d);
    if (!ids.insert(d.id).second) throw CorpusError(CorpusError::Kind::duplicate_id, d.id, "duplicate id in corpus");
  }

  RunLedger ledger;
  ledger.config = options.config_snapshot;
  if (options.run_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*options.run_dir, ec);
    if (ec) throw CorpusError(CorpusError::Kind::io_failure, options.run_dir->string(), ec.message());
    if (std::filesystem::exists(*options.run_dir / "run.json")) {
      auto prior = read_ledger(*options.run_dir);
      if (!prior.rounds.empty()) {
        std::vector<std::string> first;
        for (const auto& e : prior.rounds.front().entries) first.push_back(e.root_id);
        std::vector<std::string> expected;
        for (const auto& d : corpus) expected.push_back(d.id);
        if (first != expected)
          throw SimulationError(SimulationError::Kind::resume_mismatch,
                                "run directory holds a run over a different corpus");
      }
      ledger.rounds = std::move(prior.rounds);
    }
  }

  for (;;) {
    std::vector<PaperDoc> submissions;
    int round = 1;
    if (ledger.rounds.empty()) {
      submissions.assign(corpus.begin(), corpus.end());
    } else {
      const auto& last = ledger.rounds.back();
      round = last.round + 1;
      if (last.round >= options.max_rounds) break;
      std::vector<const RoundEntry*> rejected;
      for (const auto& e : last.entries)
        if (!e.decision.accepted && !options.frozen_ids.count(e.root_id)) rejected.push_back(&e);
      if (rejected.empty()) break;
      submissions = parallel_map<PaperDoc>(rejected.size(), options.concurrency, [&](std::size_t i) {
        return engines.research.revise(rejected[i]->submitted, rejected[i]->bundle);
      });
    }
    auto record = run_round(submissions, engines.review, round, options.concurrency);
    if (round == 1)
      for (std::size_t i = 0; i < record.entries.size(); ++i) record.entries[i].root_id = corpus[i].id;
    ledger.rounds.push_back(std::move(record));
    if (options.run_dir) {
      write_round(*options.run_dir, ledger.rounds.back());
      write_run_meta(*options.run_dir, ledger, false);
    }
    if (options.on_round) options.on_round(ledger.rounds.back());
  }

  ledger.final_status = compute_final_status(ledger.rounds, options.frozen_ids, options.max_rounds);
  validate(ledger);
  if (options.run_dir) write_run_meta(*options.run_dir, ledger, true);
  return ledger;
}

RoundSummary summarize(const RunLedger& ledger, int round) {
  const RoundRecord* record = ledger.find_round(round);
  if (!record) throw SimulationError(SimulationError::Kind::missing_round, "MissingRound(" + std::to_string(round) + ")");

  RoundSummary out;
  out.round = round;
  auto fill = [&](Authorship who, AuthorshipSummary& s) {
    double total = 0;
    for (const auto& e : record->entries) {
      if (e.authorship != who) continue;
      ++s.submitted;
      s.accepted += e.decision.accepted;
      total += e.decision.average.value();
    }
    if (s.submitted) {
      s.avg_score = total / static_cast<double>(s.submitted);
      s.acc_rate = static_cast<double>(s.accepted) / static_cast<double>(s.submitted);
    }
  };
  fill(Authorship::human, out.human);
  fill(Authorship::llm, out.llm);

  std::map<std::vector<std::string>, std::pair<std::vector<const RoundEntry*>, std::vector<const RoundEntry*>>> groups;
  for (const auto& e : record->entries) {
    auto key = keyword_set(e.submitted);
    if (key.empty()) continue;
    auto& g = groups[key];
    (e.authorship == Authorship::human ? g.first : g.second).push_back(&e);
  }
  std::size_t pairs = 0, human_wins = 0, llm_wins = 0, ties = 0;
  for (const auto& [key, g] : groups) {
    for (const auto* h : g.first) {
      for (const auto* l : g.second) {
        ++pairs;
        const auto& a = h->decision.average;
        const auto& b = l->decision.average;
        if (a > b) ++human_wins;
        else if (b > a) ++llm_wins;
        else ++ties;
      }
    }
  }
  if (pairs) {
    const auto p = static_cast<double>(pairs);
    out.win_rates = WinRates{pairs, static_cast<double>(human_wins) / p, static_cast<double>(llm_wins) / p,
                             static_cast<double>(ties) / p};
  }
  return out;
}

std::string format_summary_table(const RoundSummary& s) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %10s %9s %9s\n", "Paper Type", "Avg Score", "Win Rate", "Acc Rate");
  out += line;
  auto row = [&](const char* name, const AuthorshipSummary& a, std::optional<double> win) {
    std::snprintf(line, sizeof line, "%-12s %10s %9s %9s\n", name, a.avg_score ? fixed4(*a.avg_score).c_str() : "n/a",
                  win ? percent(*win).c_str() : "n/a", a.acc_rate ? percent(*a.acc_rate).c_str() : "n/a");
    out += line;
  };
  row("Human Paper", s.human, s.win_rates ? std::optional<double>(s.win_rates->human) : std::nullopt);
  row("LLM Paper", s.llm, s.win_rates ? std::optional<double>(s.win_rates->llm) : std::nullopt);
  if (s.win_rates)
    out += "Ties: " + percent(s.win_rates->tie) + " of " + std::to_string(s.win_rates->pairs) + " keyword-matched pairs\n";
  else
    out += "Ties: n/a (no keyword-matched pairs)\n";
  return out;
}

std::string summary_csv(const RoundSummary& s) {
  auto num = [](std::optional<double> v) {
    if (!v) return std::string();
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", *v);
    return std::string(buf);
  };
  std::string out = "round,paper_type,submitted,accepted,avg_score,win_rate,acc_rate,tie_rate,pairs\n";
  auto row = [&](const char* name, const AuthorshipSummary& a, std::optional<double> win) {
    out += std::to_string(s.round) + "," + name + "," + std::to_string(a.submitted) + "," + std::to_string(a.accepted) +
           "," + num(a.avg_score) + "," + num(win) + "," + num(a.acc_rate) + "," +
           num(s.win_rates ? std::optional<double>(s.win_rates->tie) : std::nullopt) + "," +
           std::to_string(s.win_rates ? s.win_rates->pairs : 0) + "\n";
  };
  row("human", s.human, s.win_rates ? std::optional<double>(s.win_rates->human) : std::nullopt);
  row("llm", s.llm, s.win_rates ? std::optional<double>(s.win_rates->llm) : std::nullopt);
  return out;
}

}  // namespace revsim
