#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "revsim/analysis/features.hpp"
#include "revsim/analysis/parse_client.hpp"
#include "revsim/config.hpp"
#include "revsim/docmodel.hpp"
#include "revsim/llm_gateway.hpp"
#include "revsim/report.hpp"
#include "revsim/research_engine.hpp"
#include "revsim/review_engine.hpp"
#include "revsim/simulator.hpp"

namespace fs = std::filesystem;
using namespace revsim;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kEngineError = 2;

// Thrown for anything the operator must fix before a run can start.
struct InputError : Error {
  using Error::Error;
};

struct CommonFlags {
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  std::optional<int> max_rounds;
  std::optional<std::string> fixtures;
  std::optional<std::string> corpus;
  std::optional<std::string> record;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "TOML run configuration");
  cmd->add_option("--out", f.out, "Output path");
  cmd->add_option("--seed", f.seed, "Seed for seeded steps");
  cmd->add_option("--backend", f.backend, "scripted or http")->check(CLI::IsMember({"scripted", "http"}));
  cmd->add_option("--max-rounds", f.max_rounds, "Round cap");
  cmd->add_option("--fixtures", f.fixtures, "Fixture store for the scripted backend");
  cmd->add_option("--corpus", f.corpus, "NDJSON corpus");
  cmd->add_option("--record", f.record, "Save every model response to this fixture store");
}

RunConfig resolve_config(const CommonFlags& f, bool need_backend) {
  RunConfig c = f.config ? load_config(*f.config) : RunConfig{};
  auto env = process_env();
  apply_env_overrides(c, env);
  if (f.backend) c.backend = *f.backend == "http" ? BackendKind::http : BackendKind::scripted;
  if (f.seed) c.seed = *f.seed;
  if (f.max_rounds) c.max_rounds = *f.max_rounds;
  if (f.fixtures) c.paths.fixtures = *f.fixtures;
  if (f.corpus) c.paths.corpus = *f.corpus;
  if (need_backend) validate(c, env);
  return c;
}

/// Owns whatever backends the config asks for and hands out one per role.
class Backends {
 public:
  explicit Backends(const RunConfig& c, const std::optional<std::string>& record) {
    if (c.backend == BackendKind::scripted) {
      scripted_ = std::make_unique<llm::ScriptedBackend>(llm::ScriptedBackend::from_file(*c.paths.fixtures));
    } else {
      for (const char* role : {"review", "research"}) {
        const auto& model = c.model_for(role);
        if (!http_.count(model))
          http_[model] = std::make_unique<llm::HttpBackend>(llm::HttpBackend::options_from_env(model, c.retry));
        role_model_[role] = model;
      }
    }
    if (record) {
      record_path_ = *record;
      for (const char* role : {"review", "research"}) recorders_[role] = std::make_unique<llm::RecordingBackend>(base(role));
    }
  }

  ~Backends() {
    try {
      save();
    } catch (...) {
    }
  }

  llm::Backend& for_role(const std::string& role) {
    if (auto it = recorders_.find(role); it != recorders_.end()) return *it->second;
    return base(role);
  }

  void save() {
    if (!record_path_) return;
    std::string text;
    for (auto& [role, r] : recorders_) text += r->to_ndjson();
    std::ofstream(*record_path_) << text;
    record_path_.reset();
  }

 private:
  llm::Backend& base(const std::string& role) {
    if (scripted_) return *scripted_;
    return *http_.at(role_model_.at(role));
  }

  std::unique_ptr<llm::ScriptedBackend> scripted_;
  std::map<std::string, std::unique_ptr<llm::HttpBackend>> http_;
  std::map<std::string, std::string> role_model_;
  std::map<std::string, std::unique_ptr<llm::RecordingBackend>> recorders_;
  std::optional<std::string> record_path_;
};

PromptSet prompts_for(const RunConfig& c) {
  return c.paths.prompts ? PromptSet::with_overrides(*c.paths.prompts) : PromptSet::defaults();
}

review::ReviewOptions review_options(const RunConfig& c) {
  review::ReviewOptions o;
  o.temperature = c.review_temperature;
  o.rating_mode = c.rating_mode;
  return o;
}

research::ResearchOptions research_options(const RunConfig& c) {
  research::ResearchOptions o;
  o.draft_temperature = o.revise_temperature = o.polish_temperature = c.research_temperature;
  o.max_polish_concurrency = c.concurrency;
  return o;
}

std::vector<PaperDoc> load_docs(const std::string& path) {
  try {
    return read_corpus(path);
  } catch (const CorpusError& e) {
    throw InputError(e.what());
  }
}

PaperDoc pick_doc(const std::string& path, const std::optional<std::string>& id) {
  auto docs = load_docs(path);
  if (docs.empty()) throw InputError(path + " holds no document");
  if (!id) return docs.front();
  for (auto& d : docs)
    if (d.id == *id) return d;
  throw InputError("no document with id " + *id + " in " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::optional<std::string>& out, const std::string& text) {
  if (!out || *out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(*out, std::ios::binary);
  if (!f) throw InputError("cannot write " + *out);
  f << text;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

std::vector<double> parse_ratios(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw InputError("bad ratio '" + item + "'");
    }
  }
  return out;
}

// Two-phase runner: `load` failures are input errors, `run` failures engine errors.
template <typename Load, typename Run>
int guarded(Load load, Run run) {
  try {
    load();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  try {
    run();
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const analysis::AnalysisError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == analysis::AnalysisError::Kind::malformed_input ? kInputError : kEngineError;
  } catch (const std::exception& e) {
    std::cerr << "engine error: " << e.what() << "\n";
    return kEngineError;
  }
  return kOk;
}

// ---- simulate ----

int cmd_simulate(const CommonFlags& f) {
  RunConfig config;
  std::vector<PaperDoc> corpus;
  fs::path out;
  return guarded(
      [&] {
        config = resolve_config(f, true);
        if (!config.paths.corpus) throw InputError("no corpus given (paths.corpus or --corpus)");
        corpus = load_docs(config.paths.corpus->string());
        if (f.out) out = *f.out;
        else if (config.paths.output) out = *config.paths.output;
        else throw InputError("no output directory given (paths.output or --out)");
      },
      [&] {
        Backends backends(config, f.record);
        review::ReviewEngine reviewer(backends.for_role("review"), prompts_for(config), review_options(config));
        research::ResearchEngine researcher(backends.for_role("research"), prompts_for(config),
                                            research_options(config));
        SimulationOptions opts;
        opts.max_rounds = config.max_rounds;
        opts.concurrency = config.concurrency;
        opts.frozen_ids = {config.frozen_ids.begin(), config.frozen_ids.end()};
        opts.run_dir = out;
        opts.config_snapshot = config;
        opts.on_round = [](const RoundRecord& r) {
          std::size_t accepted = 0;
          for (const auto& e : r.entries) accepted += e.decision.accepted;
          std::cerr << "round " << r.round << ": " << r.entries.size() << " reviewed, " << accepted << " accepted\n";
        };
        auto ledger = run_simulation(corpus, Engines{reviewer, researcher}, opts);
        backends.save();
        write_text(out / "summary-round-1.csv", summary_csv(summarize(ledger, 1)));
        write_text(out / "population.csv", population_csv(population(ledger)));
        write_text(out / "scores_long.csv", scores_long_csv(ledger));
        if (ledger.rounds.size() >= 2) write_text(out / "revision_deltas.csv", revision_deltas_csv(revision_deltas(ledger, 1)));
        auto report = render_report(ledger);
        write_text(out / "report.txt", report);
        std::cout << report;
      });
}

// ---- review ----

int cmd_review(const CommonFlags& f, const std::string& doc_path, const std::optional<std::string>& id, bool verbose) {
  RunConfig config;
  PaperDoc doc;
  return guarded(
      [&] {
        config = resolve_config(f, true);
        doc = pick_doc(doc_path, id);
      },
      [&] {
        Backends backends(config, f.record);
        review::ReviewEngine reviewer(backends.for_role("review"), prompts_for(config), review_options(config));
        auto bundle = reviewer.run_review(doc);
        auto decision = review::aggregate(bundle);
        backends.save();

        std::cout << "Paper: " << doc.id << " (" << doc.title << ")\n";
        auto show = [&](const char* label, const review::Review& r) {
          std::cout << label << " " << r.reviewer_id << ": Overall rating " << r.rating << "\n";
          if (verbose) std::cout << r.text << "\n\n";
        };
        for (const auto& r : bundle.initial) show("Assessment I, reviewer", r);
        if (verbose)
          for (int i = 0; i < review::kReviewers; ++i)
            std::cout << "Rebuttal to reviewer " << i + 1 << ":\n" << bundle.rebuttals[static_cast<std::size_t>(i)] << "\n\n";
        for (const auto& r : bundle.updated) show("Assessment II, reviewer", r);
        std::cout << "Meta-review: Score " << bundle.meta.rating << "\n";
        if (verbose) std::cout << bundle.meta.text << "\n\n";
        std::cout << "Average Score: " << review::format_average(bundle, decision) << "\n";
        std::cout << "Decision: " << (decision.accepted ? "ACCEPT" : "REJECT") << "\n";

        fs::path out = f.out ? fs::path(*f.out)
                             : (config.paths.output ? *config.paths.output : fs::path(".")) / (doc.id + ".bundle.ndjson");
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        nlohmann::json line = bundle;
        line["decision"] = decision;
        write_text(out, line.dump() + "\n");
        std::cerr << "bundle written to " << out.string() << "\n";
      });
}

// ---- draft ----

int cmd_draft(const CommonFlags& f, const std::vector<std::string>& keywords, const std::optional<std::string>& idea,
              const std::optional<std::string>& literature) {
  RunConfig config;
  std::vector<research::SearchRecord> refs;
  std::optional<research::FixtureSearchProvider> provider;
  return guarded(
      [&] {
        config = resolve_config(f, true);
        if (keywords.empty()) throw InputError("draft needs --keywords");
        auto lit = literature ? std::optional<fs::path>(*literature) : config.paths.literature;
        if (lit) {
          provider = research::FixtureSearchProvider::from_file(*lit);
          std::string query;
          for (const auto& k : keywords) query += k + " ";
          refs = provider->search(query, 8);
        }
      },
      [&] {
        Backends backends(config, f.record);
        research::ResearchEngine researcher(backends.for_role("research"), prompts_for(config),
                                            research_options(config));
        auto doc = researcher.draft_paper(research::DraftInput{keywords, refs, idea});
        if (provider) doc = research::verify_citations(doc, *provider);
        research::CompileOptions copts;
        copts.command = config.compile_command;
        for (const auto& d : research::compile_check(doc, copts))
          std::cerr << "diagnostic: " << research::to_string(d.kind) << " [" << d.section << " #" << d.paragraph + 1
                    << "] " << d.message << "\n";
        backends.save();
        write_output(f.out, to_ndjson_line(doc) + "\n");
      });
}

// ---- analyze ----

struct AnalyzeFlags {
  std::optional<std::string> table;
  std::optional<std::string> parses;
  std::optional<std::string> scores;
  std::optional<std::string> ledger;
  std::string target = "score";
  std::optional<std::string> before;
  std::optional<std::string> after;
  int from_round = 1;
  std::string format = "csv";
  std::optional<std::string> doc;
  std::optional<std::string> id;
  std::string ratios = "0,0.2,0.4,0.6,0.8,1.0";
  bool long_format = false;
  double threshold = 6.0;
  std::vector<std::string> adapter;
};

analysis::FeatureExtractor extractor_for(const RunConfig& c) {
  auto neg = c.paths.negative_keywords ? analysis::PhraseLexicon::from_file(*c.paths.negative_keywords)
                                       : analysis::PhraseLexicon::negative_keywords();
  auto val = c.paths.valence ? analysis::ValenceLexicon::from_file(*c.paths.valence) : analysis::ValenceLexicon::bundled();
  return analysis::FeatureExtractor(std::move(neg), std::move(val));
}

std::map<std::string, double> scores_from(const AnalyzeFlags& a) {
  std::map<std::string, double> out;
  if (a.scores) {
    auto t = analysis::parse_csv(read_text(*a.scores));
    auto id = t.column("paper_id"), sc = t.column("score");
    if (!id || !sc) throw InputError(*a.scores + " needs paper_id and score columns");
    for (const auto& r : t.rows) {
      try {
        out[r[*id]] = std::stod(r[*sc]);
      } catch (const std::exception&) {
        throw InputError("bad score for " + r[*id]);
      }
    }
  }
  if (a.ledger) {
    auto ledger = read_ledger(*a.ledger);
    if (!ledger.rounds.empty())
      for (const auto& e : ledger.rounds.front().entries) out[e.root_id] = e.decision.average.value();
  }
  return out;
}

int analyze_features(const CommonFlags& f, const AnalyzeFlags& a) {
  RunConfig config;
  std::vector<PaperDoc> docs;
  analysis::ParseFixtures parses;
  std::map<std::string, double> scores;
  std::unique_ptr<analysis::ParseClient> adapter;
  std::optional<analysis::FeatureExtractor> extractor;
  return guarded(
      [&] {
        config = resolve_config(f, false);
        if (!config.paths.corpus) throw InputError("features needs --corpus");
        docs = load_docs(config.paths.corpus->string());
        auto pf = a.parses ? std::optional<fs::path>(*a.parses) : config.paths.parse_fixtures;
        if (pf) parses = analysis::read_parse_fixtures(*pf);
        scores = scores_from(a);
        extractor = extractor_for(config);
        auto cmd = a.adapter.empty() ? config.parse_adapter : a.adapter;
        if (!pf && !cmd.empty()) {
          adapter = std::make_unique<analysis::ParseClient>(cmd);
          adapter->ping();
          extractor->set_parser(adapter.get());
        }
      },
      [&] {
        std::vector<analysis::FeatureRow> rows;
        for (const auto& d : docs) {
          auto it = parses.find(d.id);
          analysis::FeatureRow row;
          row.paper_id = d.id;
          row.authorship = d.authorship;
          if (auto s = scores.find(d.id); s != scores.end()) row.score = s->second;
          row.features = extractor->extract(d, it == parses.end() ? nullptr : &it->second);
          rows.push_back(std::move(row));
        }
        write_output(f.out, a.format == "ndjson" ? analysis::write_feature_ndjson(rows) : analysis::write_feature_csv(rows));
      });
}

int analyze_correlate(const CommonFlags& f, const AnalyzeFlags& a) {
  analysis::CsvTable table;
  return guarded(
      [&] {
        if (!a.table) throw InputError("correlate needs --table");
        table = analysis::parse_csv(read_text(*a.table));
      },
      [&] {
        auto rows = analysis::correlate_table(table, a.target);
        write_output(f.out, analysis::write_correlation_csv(rows));
      });
}

int analyze_ttest(const CommonFlags& f, const AnalyzeFlags& a) {
  std::optional<analysis::CsvTable> table;
  std::optional<RunLedger> ledger;
  return guarded(
      [&] {
        if (a.table) {
          table = analysis::parse_csv(read_text(*a.table));
          if (!a.before || !a.after) throw InputError("ttest on a table needs --before and --after columns");
        } else if (a.ledger) {
          ledger = read_ledger(*a.ledger);
        } else {
          throw InputError("ttest needs --table or --ledger");
        }
      },
      [&] {
        if (ledger) {
          write_output(f.out, revision_deltas_csv(revision_deltas(*ledger, a.from_round)));
          return;
        }
        auto b = table->column(*a.before), c = table->column(*a.after);
        if (!b || !c) throw InputError("ttest columns not found in table");
        std::vector<double> xs, ys;
        for (std::size_t r = 0; r < table->rows.size(); ++r) {
          try {
            xs.push_back(std::stod(table->rows[r][*b]));
            ys.push_back(std::stod(table->rows[r][*c]));
          } catch (const std::exception&) {
            throw InputError("row " + std::to_string(r + 2) + " has a non-numeric value");
          }
        }
        auto res = analysis::paired_t(xs, ys);
        write_output(f.out, "before,after,n,t,p_value,df\n" + *a.before + "," + *a.after + "," + std::to_string(res.n) +
                                "," + analysis::format_number(res.statistic) + "," +
                                analysis::format_number(res.p_value) + "," + analysis::format_number(*res.df) + "\n");
      });
}

int analyze_summary(const CommonFlags& f, const AnalyzeFlags& a) {
  std::vector<analysis::FeatureRow> rows;
  return guarded(
      [&] {
        if (!a.table) throw InputError("summary needs --table");
        rows = analysis::read_feature_csv(read_text(*a.table));
      },
      [&] { write_output(f.out, analysis::write_group_summary_csv(analysis::summarize_by_authorship(rows, a.threshold))); });
}

int analyze_polish(const CommonFlags& f, const AnalyzeFlags& a) {
  RunConfig config;
  PaperDoc doc;
  std::vector<double> ratios;
  return guarded(
      [&] {
        config = resolve_config(f, true);
        if (!a.doc) throw InputError("polish needs --doc");
        doc = pick_doc(*a.doc, a.id);
        ratios = parse_ratios(a.ratios);
      },
      [&] {
        Backends backends(config, f.record);
        research::ResearchEngine researcher(backends.for_role("research"), prompts_for(config),
                                            research_options(config));
        auto rows = analysis::polish_shift_report(doc, ratios, researcher, config.seed, extractor_for(config));
        backends.save();
        write_output(f.out, a.long_format ? analysis::write_polish_shift_long_csv(rows)
                                          : analysis::write_polish_shift_csv(rows));
      });
}

// ---- report ----

int cmd_report(const CommonFlags& f, const std::string& run) {
  RunLedger ledger;
  return guarded(
      [&] {
        try {
          ledger = read_ledger(run);
        } catch (const std::exception& e) {
          throw InputError(e.what());
        }
      },
      [&] {
        if (f.out) {
          fs::path out(*f.out);
          fs::create_directories(out);
          if (!ledger.rounds.empty()) write_text(out / "summary-round-1.csv", summary_csv(summarize(ledger, 1)));
          write_text(out / "population.csv", population_csv(population(ledger)));
          write_text(out / "scores_long.csv", scores_long_csv(ledger));
          if (ledger.rounds.size() >= 2)
            write_text(out / "revision_deltas.csv", revision_deltas_csv(revision_deltas(ledger, 1)));
        }
        std::cout << render_report(ledger);
      });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Peer-review simulation and manuscript analytics"};
  app.require_subcommand(1);

  CommonFlags sim_f, rev_f, draft_f, an_f, rep_f;

  auto* simulate = app.add_subcommand("simulate", "Run the research/review rounds over a corpus");
  add_common(simulate, sim_f);

  std::string doc_path;
  std::optional<std::string> doc_id;
  bool verbose = false;
  auto* review = app.add_subcommand("review", "Review one paper through the five stages");
  add_common(review, rev_f);
  review->add_option("doc", doc_path, "NDJSON file holding the paper")->required();
  review->add_option("--id", doc_id, "Paper id when the file holds several");
  review->add_flag("--verbose", verbose, "Print review texts");

  std::vector<std::string> keywords;
  std::optional<std::string> idea, literature;
  auto* draft = app.add_subcommand("draft", "Draft a paper from keywords");
  add_common(draft, draft_f);
  draft->add_option("--keywords", keywords, "Topic keywords")->delimiter(',');
  draft->add_option("--idea", idea, "Research idea");
  draft->add_option("--literature", literature, "Literature index (NDJSON SearchRecords)");

  AnalyzeFlags af;
  auto* analyze = app.add_subcommand("analyze", "Feature extraction and statistics");
  analyze->require_subcommand(1);
  auto add_an = [&](const char* name, const char* help) {
    auto* s = analyze->add_subcommand(name, help);
    add_common(s, an_f);
    return s;
  };
  auto* features = add_an("features", "Emit the feature table of a corpus");
  features->add_option("--parses", af.parses, "Parse fixtures (NDJSON)");
  features->add_option("--scores", af.scores, "CSV with paper_id and score columns");
  features->add_option("--ledger", af.ledger, "Run directory; round-1 averages become scores");
  features->add_option("--format", af.format, "csv or ndjson")->check(CLI::IsMember({"csv", "ndjson"}));
  features->add_option("--parse-adapter", af.adapter, "Parse adapter command line")->expected(-1);
  auto* correlate = add_an("correlate", "Pearson correlation of each column with a target");
  correlate->add_option("--table", af.table, "CSV table")->required();
  correlate->add_option("--target", af.target, "Target column");
  auto* ttest = add_an("ttest", "Paired t-test");
  ttest->add_option("--table", af.table, "CSV table");
  ttest->add_option("--before", af.before, "Column with the earlier values");
  ttest->add_option("--after", af.after, "Column with the later values");
  ttest->add_option("--ledger", af.ledger, "Run directory: originals against first revisions");
  ttest->add_option("--from-round", af.from_round, "Round of the originals");
  auto* summary = add_an("summary", "Score summaries per authorship");
  summary->add_option("--table", af.table, "Feature CSV")->required();
  summary->add_option("--threshold", af.threshold, "Acceptance threshold");
  auto* polish = add_an("polish", "Feature shift under increasing polish ratios");
  polish->add_option("--doc", af.doc, "NDJSON file holding the base paper")->required();
  polish->add_option("--id", af.id, "Paper id when the file holds several");
  polish->add_option("--ratios", af.ratios, "Comma-separated ratios");
  polish->add_flag("--long", af.long_format, "Long format output");

  std::string run_dir;
  auto* report = app.add_subcommand("report", "Summaries of a finished run");
  add_common(report, rep_f);
  report->add_option("--run", run_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  if (*simulate) return cmd_simulate(sim_f);
  if (*review) return cmd_review(rev_f, doc_path, doc_id, verbose);
  if (*draft) return cmd_draft(draft_f, keywords, idea, literature);
  if (*report) return cmd_report(rep_f, run_dir);
  if (*features) return analyze_features(an_f, af);
  if (*correlate) return analyze_correlate(an_f, af);
  if (*ttest) return analyze_ttest(an_f, af);
  if (*summary) return analyze_summary(an_f, af);
  if (*polish) return analyze_polish(an_f, af);
  return kInputError;
}
