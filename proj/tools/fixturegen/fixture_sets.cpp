#include "fixture_sets.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "revsim/analysis/features.hpp"
#include "revsim/analysis/text.hpp"
#include "revsim/latex.hpp"
#include "revsim/prompts.hpp"
#include "revsim/research_engine.hpp"
#include "revsim/review_engine.hpp"
#include "revsim/simulator.hpp"

namespace fs = std::filesystem;

namespace revsim::fixtures {
namespace {

const std::string& user_text(const llm::ChatRequest& req) {
  if (req.messages.empty()) throw std::runtime_error("empty request");
  return req.messages.back().content;
}

// Value after "<label>" at the start of some line, trimmed.
std::string line_value(const std::string& text, std::string_view label) {
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    if (line.starts_with(label)) {
      auto v = line.substr(label.size());
      while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
      while (!v.empty() && (v.back() == ' ' || v.back() == '\r')) v.remove_suffix(1);
      return std::string(v);
    }
    pos = eol + 1;
  }
  return {};
}

std::string between(const std::string& text, std::string_view open, std::string_view close) {
  auto a = text.find(open);
  if (a == std::string::npos) return {};
  a += open.size();
  auto b = text.find(close, a);
  if (b == std::string::npos) return {};
  return text.substr(a, b - a);
}

std::string strip_newlines(std::string s) {
  while (!s.empty() && s.front() == '\n') s.erase(s.begin());
  while (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

// Small deterministic generator; modulo draws keep output identical across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(eng_() % n); }
  template <typename T>
  const T& pick(const std::vector<T>& v) { return v[below(v.size())]; }
  double unit() { return static_cast<double>(eng_() >> 11) / 9007199254740992.0; }

 private:
  std::mt19937_64 eng_;
};

std::uint64_t seed_of(std::string_view text) {
  return std::stoull(llm::sha256_hex(text).substr(0, 16), nullptr, 16);
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

// ---- vocabularies ----

const std::vector<std::string> kHumanNouns = {
    "data", "model", "test", "set",  "task", "word", "text", "rule", "step", "run",   "line",  "case",
    "part", "form",  "way",  "point", "kind", "group", "field", "type", "cost", "time", "rate", "size",
    "score", "sign", "term", "base", "role", "view",  "goal",  "plan", "tool", "code", "node", "tree",
    "graph", "link", "path", "map",  "grid", "seed",  "trial", "fact", "claim", "proof", "unit", "layer"};
const std::vector<std::string> kHumanVerbs = {"shows", "gives", "takes", "makes", "finds", "keeps", "holds",
                                              "needs", "helps", "moves", "sets",  "puts",  "gets",  "builds",
                                              "reads", "checks", "tracks", "fits",  "maps",  "links"};
const std::vector<std::string> kHumanAdjs = {"small", "large", "plain", "short", "long", "full", "new",
                                             "old",   "real",  "fair",  "hard",  "main", "same", "wide",
                                             "close", "broad", "basic", "known", "fixed", "whole"};
const std::vector<std::string> kPreps = {"of", "in", "on", "for", "from", "with", "by", "at", "into", "over"};
const std::vector<std::string> kSubordinators = {"because", "which", "although", "while", "since",
                                                 "whereas", "that",  "when",     "if"};

const std::vector<std::string> kLlmNouns = {
    "methodology",      "framework",       "representation", "optimization",    "generalization",
    "architecture",     "evaluation",      "interpretability", "configuration", "regularization",
    "initialization",   "infrastructure",  "benchmarking",    "calibration",     "distribution",
    "approximation",    "characterization", "parameterization", "visualization", "augmentation",
    "specification",    "trajectory",      "paradigm",        "modality",        "formulation",
    "implementation",   "investigation",   "methodologies",   "capability",      "scalability",
    "adaptability",     "functionality",   "granularity",     "heterogeneity",   "reproducibility",
    "transferability",  "compositionality", "controllability", "expressivity",   "efficiency",
    "consolidation",    "integration",     "orchestration",   "synchronization", "quantification",
    "categorization",   "aggregation",     "decomposition",   "instantiation",   "extrapolation",
    "interpolation",    "hierarchy",       "ontology",        "taxonomy",        "topology",
    "probability",      "variability",     "stability",       "utility",         "fidelity"};
const std::vector<std::string> kLlmVerbs = {
    "facilitates", "demonstrates", "illuminates", "necessitates", "substantiates", "operationalizes",
    "elucidates",  "accelerates",  "amplifies",   "consolidates", "differentiates", "encapsulates",
    "exemplifies", "incorporates", "intensifies", "legitimizes",  "maximizes",      "modernizes",
    "prioritizes", "revolutionizes", "streamlines", "underscores", "validates",     "capitalizes",
    "generalizes", "harmonizes",   "contextualizes", "systematizes", "reconceptualizes", "unifies"};
const std::vector<std::string> kLlmAdjs = {
    "comprehensive",  "innovative",     "sophisticated", "unprecedented", "multifaceted",  "holistic",
    "transformative", "interpretable",  "principled",    "scalable",      "systematic",    "heterogeneous",
    "hierarchical",   "contextual",     "computational", "theoretical",   "empirical",     "statistical",
    "algorithmic",    "architectural",  "methodological", "compositional", "probabilistic", "variational",
    "generative",     "discriminative", "representational", "multimodal",  "multilingual",  "adaptive",
    "dynamical",      "geometrical",    "analytical",    "experimental",  "foundational",  "operational",
    "integrative",    "collaborative",  "quantitative",  "qualitative",   "longitudinal",  "meticulous",
    "rigorous",       "nuanced",        "intricate",     "pivotal",       "remarkable",    "versatile"};

// ---- prose generators ----

// Long sentences from a small, short-word vocabulary joined by subordinate clauses.
std::string human_clause(Rng& r) {
  std::string s = "the " + (r.below(2) ? r.pick(kHumanAdjs) + " " : "") + r.pick(kHumanNouns) + " " +
                  r.pick(kHumanVerbs) + " the " + r.pick(kHumanNouns) + " " + r.pick(kPreps) + " the " +
                  r.pick(kHumanNouns);
  return s;
}

std::string human_sentence(Rng& r) {
  std::string s = human_clause(r);
  const std::size_t clauses = 2 + r.below(2);
  for (std::size_t i = 0; i < clauses; ++i) s += ", " + r.pick(kSubordinators) + " " + human_clause(r);
  return capitalize(s) + ".";
}

// Shorter single-clause sentences from a large polysyllabic vocabulary.
std::string llm_sentence(Rng& r) {
  std::string s = r.pick(kLlmAdjs) + " " + r.pick(kLlmNouns) + " " + r.pick(kLlmVerbs) + " " + r.pick(kLlmAdjs) +
                  " " + r.pick(kLlmNouns) + " " + r.pick(kPreps) + " " + r.pick(kLlmAdjs) + " " + r.pick(kLlmNouns);
  if (r.below(6) == 0) s += " which " + r.pick(kLlmVerbs) + " " + r.pick(kLlmNouns);
  else s += " and " + r.pick(kLlmNouns);
  return capitalize(s) + ".";
}

std::string paragraph(Authorship style, Rng& r) {
  const bool human = style == Authorship::human;
  const std::size_t n = human ? 5 + r.below(2) : 3;
  std::string p;
  for (std::size_t i = 0; i < n; ++i) p += (p.empty() ? "" : " ") + (human ? human_sentence(r) : llm_sentence(r));
  return p;
}

PaperDoc styled_doc(std::string id, Authorship style, Rng& r) {
  PaperDoc d;
  d.id = std::move(id);
  d.authorship = style;
  d.title = capitalize(style == Authorship::human ? r.pick(kHumanAdjs) + " " + r.pick(kHumanNouns) + " study"
                                                  : r.pick(kLlmAdjs) + " " + r.pick(kLlmNouns));
  d.keywords = {style == Authorship::human ? r.pick(kHumanNouns) : r.pick(kLlmNouns)};
  const bool human = style == Authorship::human;
  const std::vector<std::pair<std::string, std::size_t>> layout =
      human ? std::vector<std::pair<std::string, std::size_t>>{{"Abstract", 1}, {"Introduction", 2}, {"Method", 2}, {"Conclusion", 1}}
            : std::vector<std::pair<std::string, std::size_t>>{{"Abstract", 1}, {"Introduction", 4}, {"Method", 4}, {"Conclusion", 2}};
  for (const auto& [name, count] : layout) {
    Section s{name, {}};
    for (std::size_t i = 0; i < count; ++i) s.paragraphs.push_back(paragraph(style, r));
    d.sections.push_back(std::move(s));
  }
  return d;
}

// ---- review ----

const char* kInitialBody =
    "Significance and novelty: The question is relevant and the problem setting is stated clearly.\n\n"
    "Reasons for acceptance: The experiments cover several settings and the writing is easy to follow.\n\n"
    "Reasons for rejection: Some design choices are not justified and the analysis stays shallow.\n\n"
    "Suggestions for improvement: Add ablations and report variance across runs.";
const char* kRebuttalBody =
    "Response: We thank the reviewer for the careful reading. We will clarify the design choices, add the "
    "requested ablations and report variance over repeated runs.";
const char* kUpdatedBody =
    "Summary: The response addresses part of the concerns; the remaining issues are noted above.";
const char* kMetaBody =
    "Summary: The reviewers agree on the relevance of the topic and differ on the depth of the analysis.";

std::string rating_line(int r) { return "Overall rating: " + std::to_string(r); }

// ---- A.3 paper ----

const std::map<std::pair<std::string, int>, std::string>& worked_texts() {
  static const std::map<std::pair<std::string, int>, std::string> t = {
      {{"review.assessment1", 1},
       "Overall rating: 6\n\nSignificance and novelty: The study asks whether language models that make "
       "predictions on tabular records carry social bias from their training data into those predictions, "
       "which matters for consequential settings.\n\nReasons for acceptance: The experimental setup spans "
       "several datasets and several mitigation methods.\n\nReasons for rejection: How the few-shot examples "
       "are selected is not explained, and the results are described more than they are analysed.\n\n"
       "Suggestions for improvement: Explain the selection procedure and discuss why the mitigations help."},
      {{"review.assessment1", 2},
       "Overall rating: 4\n\nSignificance and novelty: Fairness of language models on tabular prediction is a "
       "timely topic, but the mitigation methods themselves are known.\n\nReasons for acceptance: The problem "
       "is relevant to practice.\n\nReasons for rejection: The analysis does not reach the causes of the "
       "observed bias and the datasets are few.\n\nSuggestions for improvement: Broaden the datasets and "
       "probe the mechanisms behind the disparities."},
      {{"review.assessment1", 3},
       "Overall rating: 5\n\nSignificance and novelty: The topic is under-studied and the paper helps fill "
       "that gap.\n\nReasons for acceptance: The evaluation is thorough within its scope.\n\nReasons for "
       "rejection: In-context learning, fine-tuning and label flipping have each been studied before, so the "
       "methodological contribution is thin.\n\nSuggestions for improvement: State what is new relative to "
       "earlier fairness studies."},
      {{"review.rebuttal", 1},
       "Response: Thank you for the feedback. We will describe how few-shot examples are chosen and expand "
       "the discussion of why each mitigation changes the outcome."},
      {{"review.rebuttal", 2},
       "Response: Thank you for the comments. We agree the causes deserve more study and will add datasets "
       "and a section on mechanisms in the revision."},
      {{"review.rebuttal", 3},
       "Response: Thank you for the review. Our contribution is the systematic comparison of these methods "
       "on tabular prediction, which earlier work did not provide."},
      {{"review.assessment2", 1},
       "Overall rating: 6\n\nSummary: The authors answered most points and promised the missing details; my "
       "assessment is unchanged."},
      {{"review.assessment2", 2},
       "Overall rating: 5\n\nSummary: The plans for more datasets and deeper analysis are welcome, though "
       "they remain future work."},
      {{"review.assessment2", 3},
       "Overall rating: 5\n\nSummary: The clarification helps, but the methodological novelty is still "
       "limited."},
      {{"review.meta", 0},
       "Score: 5\n\nSummary: The paper examines bias inherited by language models predicting on tabular "
       "data and compares several mitigations. Reviewers value the topic but find the analysis shallow and "
       "the novelty modest."},
  };
  return t;
}

std::string worked_response(const llm::ChatRequest& req) {
  const auto& user = user_text(req);
  int reviewer = 0;
  if (req.stage_tag != review::stage_tag::meta) reviewer = std::stoi(line_value(user, "Reviewer:"));
  return worked_texts().at({req.stage_tag, reviewer});
}

Store record_review(const PaperDoc& doc, llm::CallbackBackend::Fn fn) {
  llm::CallbackBackend cb(std::move(fn));
  llm::RecordingBackend rec(cb);
  review::ReviewEngine engine(rec, PromptSet::defaults());
  engine.run_review(doc);
  Store s;
  merge(s, rec);
  return s;
}

// ---- demo corpus ----

struct Topic {
  std::string id;
  std::vector<std::string> keywords;
  std::vector<std::string> titles;  // literature titles
};

const std::vector<Topic>& topics() {
  static const std::vector<Topic> t = {
      {"1", {"tabular data", "fairness"},
       {"Bias in tabular data prediction with language models", "Fairness audits for tabular data classifiers"}},
      {"2", {"graph neural networks", "oversmoothing"},
       {"Oversmoothing in deep graph neural networks", "Residual connections for graph neural networks"}},
      {"3", {"retrieval augmentation", "question answering"},
       {"Retrieval augmentation for open question answering", "Dense passage retrieval for question answering"}},
      {"4", {"diffusion models", "image editing"},
       {"Text guided image editing with diffusion models", "Inversion methods for diffusion models"}},
      {"5", {"reinforcement learning", "exploration"},
       {"Count based exploration in reinforcement learning", "Curiosity driven exploration for reinforcement learning"}},
  };
  return t;
}

std::string bib_key(const std::string& title, int year) {
  std::string w;
  for (char c : title) {
    if (c == ' ') break;
    w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return w + std::to_string(year);
}

std::string human_latex(const Topic& t) {
  Rng r(seed_of("demo-human-" + t.id));
  const std::string k0 = t.keywords[0], k1 = t.keywords[1];
  std::ostringstream tex;
  tex << "\\documentclass{article}\n"
      << "\\title{A study of " << k1 << " in " << k0 << "}\n"
      << "\\begin{document}\n\\maketitle\n"
      << "\\begin{abstract}\n"
      << "We look at " << k1 << " in " << k0 << ". " << paragraph(Authorship::human, r) << "\n"
      << "\\end{abstract}\n\n"
      << "\\section{Introduction}\n"
      << "% draft note: tighten this part\n"
      << "Work on " << k0 << " has grown fast \\cite{" << bib_key(t.titles[0], 2023) << "}. "
      << paragraph(Authorship::human, r) << "\n\n"
      << paragraph(Authorship::human, r) << "\n\n"
      << "\\section{Method}\n"
      << "We write the loss as $L = \\sum_i \\ell_i$ and keep the rest fixed. " << paragraph(Authorship::human, r)
      << "\n\n"
      << "\\begin{table}\\centering\\begin{tabular}{cc}a & b\\\\\\end{tabular}\\caption{Setup}\\end{table}\n\n"
      << paragraph(Authorship::human, r) << "\n\n"
      << "\\section{Conclusion}\n"
      << "\\textbf{In short}, " << paragraph(Authorship::human, r) << "\n\n"
      << "\\appendix\n\\section{Extra runs}\nThis part is dropped on ingest.\n"
      << "\\end{document}\n";
  return tex.str();
}

std::string human_bib(const Topic& t) {
  return "@article{" + bib_key(t.titles[0], 2023) + ",\n  title = {" + t.titles[0] + "},\n  year = {2023}\n}\n";
}

// Research-side responder for drafting the llm papers and revising any paper.
std::string demo_research_response(const llm::ChatRequest& req) {
  const auto& user = user_text(req);
  if (req.stage_tag == research::stage_tag::revise) {
    auto text = strip_newlines(between(user, "#### Section to revise begin ####\n", "\n#### Section to revise end ####"));
    return "```latex\n" + text + " This revision adds the analysis the reviewers asked for.\n```\n";
  }
  if (req.stage_tag.starts_with("research.draft.")) {
    const auto keywords = line_value(user, "Research keywords:");
    const auto section = between(user, "Write the \"", "\" section");
    Rng r(seed_of("demo-draft-" + keywords + "-" + section));
    std::string refs_block = between(user, "References you may cite (use the keys exactly):\n", "\n\n");
    std::string first_key = refs_block.substr(0, refs_block.find(':'));
    std::string out;
    if (section == "Abstract") out += "Title: Toward " + keywords + "\n\n";
    out += "```latex\n";
    if (section == "Introduction" && !first_key.empty() && first_key != "(none)")
      out += "Prior studies of " + keywords + " motivate this work \\cite{" + first_key + "}. ";
    out += paragraph(Authorship::llm, r) + "\n\n" + paragraph(Authorship::llm, r) + "\n";
    if (section == "Related Work") {
      out += "\nA further line of inquiry is reported in \\cite{phantom2024}.\n```\n";
      out += "```refs\n{\"key\": \"phantom2024\", \"title\": \"An unpublished survey of " + keywords +
             "\", \"year\": 2024}\n```\n";
      return out;
    }
    return out + "```\n";
  }
  throw std::runtime_error("demo responder: unexpected stage " + req.stage_tag);
}

std::string demo_review_response(const llm::ChatRequest& req) {
  const auto id = line_value(user_text(req), "Manuscript:");
  const auto root = lineage_root_id(id);
  int rev = 0;
  if (auto at = id.rfind("@v"); at != std::string::npos && root != id) rev = std::stoi(id.substr(at + 2));
  const int round = rev + 1;
  const int accept_at = demo_accept_round().at(root);
  const bool accept = accept_at != 0 && round >= accept_at;
  static const Ratings kAccept = {6, 6, 7, 6, 7, 6, 6};
  static const Ratings kReject = {5, 5, 6, 5, 6, 5, 5};
  return review_response(req, accept ? kAccept : kReject);
}

std::string char_words(const std::string& seed_text, std::size_t count) {
  static const std::vector<std::string> syl = {"ka", "lo", "mi", "ne", "ru", "ta", "vi", "so", "da", "pe",
                                               "zu", "fo", "ri", "ba", "ge", "hu", "jo", "lu", "ma", "xe"};
  auto h = llm::sha256_hex(seed_text);
  std::string prefix;
  for (std::size_t i = 0; i < 4; ++i) prefix += syl[std::stoul(h.substr(i * 2, 2), nullptr, 16) % 20];
  std::string out;
  for (std::size_t j = 0; j < count; ++j) {
    std::string w = prefix + syl[j % 20] + syl[(j / 20) % 20] + syl[(j / 400) % 20];
    out += (out.empty() ? "" : " ") + w;
  }
  return out;
}

}  // namespace

std::string store_ndjson(const Store& store) {
  std::string out;
  for (const auto& [k, v] : store) out += nlohmann::json{{"key", k}, {"content", v}}.dump() + "\n";
  return out;
}

void merge(Store& into, const llm::RecordingBackend& recorded) {
  std::istringstream in(recorded.to_ndjson());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    into[j.at("key").get<std::string>()] = j.at("content").get<std::string>();
  }
}

std::string review_response(const llm::ChatRequest& req, const Ratings& ratings) {
  const auto& user = user_text(req);
  if (req.stage_tag == review::stage_tag::meta) return "Score: " + std::to_string(ratings[6]) + "\n\n" + kMetaBody;
  const int reviewer = std::stoi(line_value(user, "Reviewer:"));
  const auto i = static_cast<std::size_t>(reviewer - 1);
  if (req.stage_tag == review::stage_tag::assessment1) return rating_line(ratings[i]) + "\n\n" + kInitialBody;
  if (req.stage_tag == review::stage_tag::rebuttal) return kRebuttalBody;
  if (req.stage_tag == review::stage_tag::assessment2) return rating_line(ratings[3 + i]) + "\n\n" + kUpdatedBody;
  throw std::runtime_error("review responder: unexpected stage " + req.stage_tag);
}

PaperDoc worked_paper() {
  PaperDoc d;
  d.id = "tabular-fairness";
  d.title = "Fairness of language models on tabular prediction";
  d.keywords = {"fairness", "tabular data"};
  d.authorship = Authorship::llm;
  d.sections = {
      {"Abstract",
       {"We measure how language models that predict outcomes from tabular records treat demographic groups "
        "and compare in-context examples, fine-tuning and label flipping as mitigations."}},
      {"Introduction",
       {"Language models are now applied to tabular prediction in lending, hiring and health. Bias learned "
        "during pretraining can surface in these predictions [CIT]."}},
      {"Method",
       {"We serialize each record as text, query the model for a label and compare group-wise error rates "
        "across three datasets."}},
      {"Conclusion", {"All three mitigations narrow the gap, but none removes it."}},
  };
  return d;
}

Store worked_store() { return record_review(worked_paper(), worked_response); }

Store ratings_store(const PaperDoc& doc, const Ratings& ratings) {
  return record_review(doc, [ratings](const llm::ChatRequest& r) { return review_response(r, ratings); });
}

const std::map<std::string, int>& demo_accept_round() {
  static const std::map<std::string, int> m = {{"H1", 2}, {"H2", 1}, {"H3", 3}, {"H4", 2}, {"H5", 0},
                                               {"L1", 1}, {"L2", 2}, {"L3", 3}, {"L4", 1}};
  return m;
}

Demo build_demo() {
  Demo demo;
  for (const auto& t : topics())
    for (std::size_t i = 0; i < t.titles.size(); ++i)
      demo.literature.push_back({t.titles[i], 2023 - static_cast<int>(i), std::nullopt, std::nullopt});

  for (const auto& t : topics()) {
    const std::string id = "H" + t.id;
    auto src = human_latex(t);
    demo.latex[id] = src;
    IngestOptions opts;
    opts.id = id;
    opts.keywords = t.keywords;
    opts.bibtex = human_bib(t);
    demo.corpus.push_back(ingest_latex(src, opts).doc);
  }

  llm::CallbackBackend research_cb(demo_research_response, "demo-research");
  llm::RecordingBackend research_rec(research_cb);
  llm::CallbackBackend review_cb(demo_review_response, "demo-review");
  llm::RecordingBackend review_rec(review_cb);
  research::ResearchEngine researcher(research_rec, PromptSet::defaults());
  review::ReviewEngine reviewer(review_rec, PromptSet::defaults());

  research::FixtureSearchProvider provider(demo.literature);
  for (const auto& t : topics()) {
    if (t.id == "5") continue;  // H5 has no llm counterpart
    std::string query;
    for (const auto& k : t.keywords) query += k + " ";
    auto refs = provider.search(query, 8);
    auto doc = researcher.draft_paper(research::DraftInput{t.keywords, refs, std::nullopt});
    doc = research::verify_citations(doc, provider);
    doc.id = "L" + t.id;
    demo.corpus.push_back(std::move(doc));
  }

  SimulationOptions opts;
  opts.concurrency = 1;
  run_simulation(demo.corpus, Engines{reviewer, researcher}, opts);
  merge(demo.store, research_rec);
  merge(demo.store, review_rec);
  return demo;
}

std::vector<PaperDoc> style_corpus(Authorship style, std::size_t n, std::uint64_t seed) {
  Rng r(seed);
  std::vector<PaperDoc> out;
  const std::string prefix = style == Authorship::human ? "human-" : "llm-";
  for (std::size_t i = 0; i < n; ++i) {
    const std::string num = (i + 1 < 10 ? "0" : "") + std::to_string(i + 1);
    out.push_back(styled_doc(prefix + num, style, r));
  }
  return out;
}

std::vector<analysis::ParsedSentence> pseudo_parse(const PaperDoc& doc) {
  static const std::map<std::string, std::string, std::less<>> clause_label = {
      {"because", "advcl"}, {"although", "advcl"}, {"while", "advcl"}, {"since", "advcl"}, {"whereas", "advcl"},
      {"when", "advcl"},    {"if", "advcl"},       {"which", "acl:relcl"}, {"that", "ccomp"}};
  std::vector<analysis::ParsedSentence> out;
  for (const auto& tokens : analysis::segment(analysis::prose_text(doc)).sentences()) {
    analysis::ParsedSentence p;
    p.tokens = tokens;
    const int n = static_cast<int>(tokens.size());
    std::optional<std::string> pending;
    for (int i = 0; i < n; ++i) {
      p.heads.push_back(i + 1 < n ? i + 2 : 0);
      std::string lower = tokens[static_cast<std::size_t>(i)];
      std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
      if (i + 1 == n) {
        p.labels.push_back("root");
      } else if (auto it = clause_label.find(lower); it != clause_label.end()) {
        p.labels.push_back("mark");
        pending = it->second;
      } else if (pending && analysis::is_word(tokens[static_cast<std::size_t>(i)])) {
        p.labels.push_back(*pending);
        pending.reset();
      } else {
        p.labels.push_back(analysis::is_word(tokens[static_cast<std::size_t>(i)]) ? "dep" : "punct");
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

NegKeywordCorpus negkw_corpus(std::size_t n, std::uint64_t seed) {
  static const std::vector<std::string> planted_words = {"gap",     "failure", "limitation", "risk",    "drawback",
                                                         "flaw",    "weakness", "threat",    "pitfall", "shortcoming"};
  Rng r(seed);
  NegKeywordCorpus c;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = (i * 3) % 8;
    std::string abstract;
    for (std::size_t s = 0; s < 3; ++s) abstract += (abstract.empty() ? "" : " ") + llm_sentence(r);
    for (std::size_t j = 0; j < k; ++j)
      abstract += " One " + planted_words[(i + j) % planted_words.size()] + " of the " + r.pick(kLlmNouns) + " is noted.";
    PaperDoc d;
    const std::string num = (i + 1 < 10 ? "0" : "") + std::to_string(i + 1);
    d.id = "neg-" + num;
    d.title = capitalize(r.pick(kLlmAdjs) + " " + r.pick(kLlmNouns));
    d.keywords = {r.pick(kLlmNouns)};
    d.authorship = i % 2 ? Authorship::llm : Authorship::human;
    d.sections = {{"Abstract", {abstract}}, {"Introduction", {paragraph(Authorship::llm, r)}}};
    c.docs.push_back(std::move(d));
    c.planted.push_back(k);
    const double jitter = (r.unit() - 0.5) * 0.6;
    c.scores.push_back(std::round((6.8 - 0.3 * static_cast<double>(k) + jitter) * 100.0) / 100.0);
  }
  return c;
}

PaperDoc polish_base() {
  Rng r(seed_of("polish-base"));
  PaperDoc d;
  d.id = "polish-base";
  d.title = "A plain study of rule sets";
  d.keywords = {"rule sets"};
  d.authorship = Authorship::human;
  const std::vector<std::pair<std::string, std::size_t>> layout = {
      {"Abstract", 1}, {"Introduction", 3}, {"Method", 3}, {"Results Analysis", 2}, {"Conclusion", 1}};
  for (const auto& [name, count] : layout) {
    Section s{name, {}};
    for (std::size_t i = 0; i < count; ++i) s.paragraphs.push_back(paragraph(Authorship::human, r));
    d.sections.push_back(std::move(s));
  }
  return d;
}

// Replaces the paragraph with as many fresh, mutually distinct words as it had
// tokens, so type counts can only grow under rewriting.
std::string polish_response(const llm::ChatRequest& req) {
  if (req.stage_tag != research::stage_tag::polish) throw std::runtime_error("polish responder: " + req.stage_tag);
  const auto& user = user_text(req);
  auto para = user.substr(user.rfind("\n\n") + 2);
  const auto tokens = analysis::tokenize(para);
  const std::size_t n = tokens.size() > 1 ? tokens.size() - 1 : 1;
  return capitalize(char_words(para, n)) + ".";
}

Store polish_store(const PaperDoc& base) {
  llm::CallbackBackend cb(polish_response, "polish");
  llm::RecordingBackend rec(cb);
  research::ResearchEngine engine(rec, PromptSet::defaults());
  engine.polish(base, research::PolishSpec{1.0, 0});
  Store s;
  merge(s, rec);
  return s;
}

namespace {

void put(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

std::string corpus_text(const std::vector<PaperDoc>& docs) {
  std::string out;
  for (const auto& d : docs) out += to_ndjson_line(d) + "\n";
  return out;
}

}  // namespace

void write_all(const fs::path& dir) {
  // Review replays on the A.3 paper.
  const auto worked = worked_paper();
  put(dir / "worked_review" / "paper.ndjson", to_ndjson_line(worked) + "\n");
  put(dir / "worked_review" / "fixtures.ndjson", store_ndjson(worked_store()));
  put(dir / "worked_review" / "all_tens.ndjson", store_ndjson(ratings_store(worked, {10, 10, 10, 10, 10, 10, 10})));
  put(dir / "worked_review" / "all_sixes.ndjson", store_ndjson(ratings_store(worked, {6, 6, 6, 6, 6, 6, 6})));
  put(dir / "worked_review" / "one_five.ndjson", store_ndjson(ratings_store(worked, {6, 6, 6, 6, 6, 5, 6})));

  // Demo simulation.
  auto demo = build_demo();
  for (const auto& [id, src] : demo.latex) put(dir / "demo" / "latex" / (id + ".tex"), src);
  put(dir / "demo" / "corpus.ndjson", corpus_text(demo.corpus));
  put(dir / "demo" / "fixtures.ndjson", store_ndjson(demo.store));
  std::string lit;
  for (const auto& r : demo.literature) lit += nlohmann::json(r).dump() + "\n";
  put(dir / "demo" / "literature.ndjson", lit);
  put(dir / "demo" / "demo.toml",
      "backend = \"scripted\"\n"
      "max_rounds = 6\n"
      "seed = 7\n"
      "concurrency = 4\n\n"
      "[paths]\n"
      "corpus = \"corpus.ndjson\"\n"
      "fixtures = \"fixtures.ndjson\"\n"
      "literature = \"literature.ndjson\"\n");

  // Style mini-corpora and their pseudo-parses.
  auto human = style_corpus(Authorship::human, 24, 11);
  auto llm_docs = style_corpus(Authorship::llm, 24, 12);
  put(dir / "style" / "human.ndjson", corpus_text(human));
  put(dir / "style" / "llm.ndjson", corpus_text(llm_docs));
  analysis::ParseFixtures parses;
  for (const auto* set : {&human, &llm_docs})
    for (const auto& d : *set) parses[d.id] = pseudo_parse(d);
  put(dir / "style" / "parses.ndjson", analysis::to_ndjson(parses));

  // Negative-keyword corpus with planted scores.
  auto neg = negkw_corpus(30, 21);
  put(dir / "negkw" / "corpus.ndjson", corpus_text(neg.docs));
  std::string scores = "paper_id,score,planted\n";
  for (std::size_t i = 0; i < neg.docs.size(); ++i)
    scores += neg.docs[i].id + "," + analysis::format_number(neg.scores[i]) + "," + std::to_string(neg.planted[i]) + "\n";
  put(dir / "negkw" / "scores.csv", scores);

  // Planted r = 0.8 feature table.
  std::vector<analysis::FeatureRow> planted;
  const double score[] = {1, 3, 2, 5, 4};
  for (int i = 0; i < 5; ++i) {
    analysis::FeatureRow row;
    row.paper_id = "p" + std::to_string(i + 1);
    row.authorship = i % 2 ? Authorship::llm : Authorship::human;
    row.score = score[i];
    row.features.paper_length_words = static_cast<double>(i + 1);
    row.features.avg_sentence_length = 10.0 + i;
    row.features.avg_paragraph_length = 50.0;
    row.features.sentences_per_paragraph = 5.0;
    row.features.diversity_1 = 0.5;
    row.features.diversity_2 = 0.75;
    row.features.diversity_3 = 0.875;
    row.features.fkg = 12.0 - i;
    row.features.neg_keyword_count = static_cast<double>(4 - i);
    row.features.sentiment = 0.25;
    planted.push_back(row);
  }
  put(dir / "stats" / "planted_r08.csv", analysis::write_feature_csv(planted));

  // Polish experiment.
  auto base = polish_base();
  put(dir / "polish" / "base.ndjson", to_ndjson_line(base) + "\n");
  put(dir / "polish" / "fixtures.ndjson", store_ndjson(polish_store(base)));

  // Hand-computed readability and dependency fixtures.
  put(dir / "text" / "fkg_ten_monosyllables.txt", "The cat sat on the mat and the dog ran.\n");
  analysis::ParseFixtures dep;
  dep["pair"] = {{{"w1", "w2"}, {2, 0}, {"dep", "root"}}};
  dep["chain"] = {{{"w1", "w2", "w3"}, {2, 3, 0}, {"dep", "dep", "root"}}};
  dep["fork"] = {{{"w1", "w2", "w3"}, {3, 3, 0}, {"dep", "dep", "root"}}};
  put(dir / "text" / "dep_parses.ndjson", analysis::to_ndjson(dep));
}

}  // namespace revsim::fixtures
