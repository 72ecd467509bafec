#include "revsim/research_engine.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <future>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "io.hpp"
#include "revsim/latex.hpp"

namespace revsim::research {

namespace {

std::string slug(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else if (!out.empty() && out.back() != '_') out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

const std::map<std::string_view, std::string_view>& section_guidance() {
  static const std::map<std::string_view, std::string_view> g{
      {"Abstract",
       "One paragraph: the problem, why it matters, what is hard about it, the contribution and how it is "
       "verified. Put a first line \"Title: <paper title>\" above the abstract."},
      {"Introduction",
       "Expand the abstract into the motivation and approach, and close with the contributions. Prefer "
       "paragraphs to lists."},
      {"Background", "Introduce the concepts, notation and prior results needed to follow the method."},
      {"Method", "Describe what is done and why, using the notation from the background. Use paragraphs."},
      {"Experimental Setup",
       "Describe datasets, baselines, models and metrics, citing them where possible. Do not refer to "
       "figures that do not exist."},
      {"Results Analysis",
       "Report the predicted results, with LaTeX tables where helpful, and interpret every table in the text."},
      {"Related Work",
       "Compare and contrast the closest lines of work in two to four paragraphs, each opening with a bold "
       "summary of the category."},
      {"Conclusion", "One paragraph summarizing findings, limitations and future work."},
  };
  return g;
}

std::string render_sections(std::span<const Section> sections) {
  std::string out;
  for (const auto& s : sections) {
    if (!out.empty()) out += "\n\n";
    out += "## " + s.name;
    for (const auto& p : s.paragraphs) out += "\n\n" + p;
  }
  return out.empty() ? "(none yet)" : out;
}

std::string render_section(const Section& s) {
  std::string out;
  for (const auto& p : s.paragraphs) {
    if (!out.empty()) out += "\n\n";
    out += p;
  }
  return out;
}

std::string collapse_lines(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (c == '\n' || c == '\r' || c == '\t' || c == ' ') {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

std::string ref_key_for(const SearchRecord& r, std::set<std::string>& used) {
  auto terms = query_terms(r.title);
  std::string base = terms.empty() ? "ref" : terms.front();
  base.erase(std::remove_if(base.begin(), base.end(), [](char c) { return !std::isalnum(static_cast<unsigned char>(c)); }),
             base.end());
  if (r.year) base += std::to_string(*r.year);
  std::string key = base;
  for (char suffix = 'a'; used.count(key); ++suffix) key = base + suffix;
  used.insert(key);
  return key;
}

// Unbiased draw in [0, bound) from a 64-bit engine, independent of the
// standard library's distribution implementation.
std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = gen();
  } while (x >= limit);
  return x % bound;
}

double title_similarity(std::string_view a, std::string_view b) {
  auto ta = query_terms(a);
  auto tb = query_terms(b);
  std::set<std::string> sa(ta.begin(), ta.end()), sb(tb.begin(), tb.end());
  if (sa.empty() || sb.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

}  // namespace

std::string stage_tag::draft(std::string_view section) { return "research.draft." + slug(section); }

std::string_view to_string(Diagnostic::Kind k) {
  switch (k) {
    case Diagnostic::Kind::unbalanced_brace: return "UnbalancedBrace";
    case Diagnostic::Kind::unbalanced_environment: return "UnbalancedEnvironment";
    case Diagnostic::Kind::undefined_reference: return "UndefinedReference";
    case Diagnostic::Kind::external_tool: return "ExternalTool";
  }
  return "Diagnostic";
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw ResearchError(ResearchError::Kind::length_mismatch,
                        "LengthMismatch(" + std::to_string(u.size()) + " vs " + std::to_string(v.size()) + ")");
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i]) || !std::isfinite(v[i]))
      throw ResearchError(ResearchError::Kind::zero_vector, "embedding has non-finite components");
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw ResearchError(ResearchError::Kind::zero_vector, "ZeroVector");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

std::vector<double> MockEmbedding::embed(std::string_view text) const {
  auto digest = llm::sha256_hex(text);
  std::uint64_t seed = std::stoull(digest.substr(0, 16), nullptr, 16);
  std::mt19937_64 gen(seed);
  std::vector<double> v(dim_);
  double norm = 0;
  for (auto& x : v) {
    // Uniform in [-1, 1) from the top 53 bits.
    x = static_cast<double>(gen() >> 11) * 0x1.0p-52 - 1.0;
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

std::vector<Idea> dedup_ideas(std::span<const Idea> ideas, const EmbeddingBackend& embed, double threshold) {
  if (ideas.empty()) throw PreconditionError("dedup_ideas needs at least one idea");
  std::vector<Idea> kept;
  for (const auto& idea : ideas) {
    Idea candidate = idea;
    if (!candidate.embedding) candidate.embedding = embed.embed(candidate.text);
    bool duplicate = std::any_of(kept.begin(), kept.end(), [&](const Idea& k) {
      return cosine(*k.embedding, *candidate.embedding) >= threshold;
    });
    if (!duplicate) kept.push_back(std::move(candidate));
  }
  return kept;
}

std::size_t polish_count(std::size_t count, double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw PreconditionError("polish ratio must be within [0, 1]");
  // Half-up rounding; the epsilon absorbs products like 0.15 * 10 = 1.4999...
  auto k = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(count) + 0.5 + 1e-9));
  return std::min(k, count);
}

std::vector<std::size_t> polish_selection(std::size_t count, double ratio, std::uint64_t seed) {
  const std::size_t k = polish_count(count, ratio);
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 gen(seed);
  for (std::size_t i = count; i > 1; --i) {
    auto j = static_cast<std::size_t>(bounded(gen, i));
    std::swap(order[i - 1], order[j]);
  }
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<Diagnostic> lint_section(const Section& section) {
  std::vector<Diagnostic> diags;
  for (std::size_t p = 0; p < section.paragraphs.size(); ++p) {
    std::string_view text = section.paragraphs[p];
    int depth = 0;
    bool brace_error = false;
    std::vector<std::string> envs;
    std::optional<std::string> env_error;
    for (std::size_t i = 0; i < text.size(); ++i) {
      char c = text[i];
      if (c == '\\') {
        auto rest = text.substr(i);
        bool is_begin = rest.starts_with("\\begin{");
        bool is_end = rest.starts_with("\\end{");
        if (is_begin || is_end) {
          auto open = text.find('{', i);
          auto close = text.find('}', open);
          if (close == std::string_view::npos) {
            brace_error = true;
            break;
          }
          std::string name(text.substr(open + 1, close - open - 1));
          if (is_begin) {
            envs.push_back(name);
          } else if (envs.empty() || envs.back() != name) {
            if (!env_error) env_error = "\\end{" + name + "} without matching \\begin";
          } else {
            envs.pop_back();
          }
          i = close;
          continue;
        }
        ++i;  // skip the escaped character
        continue;
      }
      if (c == '%') {
        while (i < text.size() && text[i] != '\n') ++i;
        continue;
      }
      if (c == '{') ++depth;
      if (c == '}' && --depth < 0) brace_error = true;
    }
    if (depth != 0) brace_error = true;
    if (!envs.empty() && !env_error) env_error = "\\begin{" + envs.back() + "} is never closed";
    if (brace_error)
      diags.push_back({Diagnostic::Kind::unbalanced_brace, section.name, p, "unbalanced braces"});
    if (env_error) diags.push_back({Diagnostic::Kind::unbalanced_environment, section.name, p, *env_error});
  }
  return diags;
}

std::string render_latex(const PaperDoc& doc) {
  std::ostringstream out;
  out << "\\documentclass{article}\n\\title{" << doc.title << "}\n\\begin{document}\n\\maketitle\n";
  for (const auto& s : doc.sections) {
    if (s.name == "Abstract") {
      out << "\\begin{abstract}\n" << render_section(s) << "\n\\end{abstract}\n";
      continue;
    }
    out << "\\section{" << s.name << "}\n" << render_section(s) << "\n\n";
  }
  if (!doc.references.empty()) {
    out << "\\begin{thebibliography}{" << doc.references.size() << "}\n";
    for (const auto& r : doc.references) {
      out << "\\bibitem{" << r.key << "} " << r.title;
      if (r.year) out << ", " << *r.year;
      out << ".\n";
    }
    out << "\\end{thebibliography}\n";
  }
  out << "\\end{document}\n";
  return out.str();
}

std::vector<Diagnostic> compile_check(const PaperDoc& doc, const CompileOptions& options) {
  std::vector<Diagnostic> diags;
  for (const auto& s : doc.sections) {
    auto d = lint_section(s);
    diags.insert(diags.end(), d.begin(), d.end());
  }

  std::set<std::string, std::less<>> known;
  for (const auto& r : doc.references) known.insert(r.key);
  std::set<std::string, std::less<>> reported;
  for (const auto& s : doc.sections) {
    for (std::size_t p = 0; p < s.paragraphs.size(); ++p) {
      for (const auto& use : find_citations(s.paragraphs[p])) {
        for (const auto& key : use.keys) {
          if (known.count(key) || !reported.insert(key).second) continue;
          diags.push_back({Diagnostic::Kind::undefined_reference, s.name, p, "citation key '" + key + "' is not defined"});
        }
      }
    }
  }

  if (options.command) {
    namespace fs = std::filesystem;
    fs::path ws = options.workspace.value_or(fs::temp_directory_path() / ("revsim-compile-" + doc.id));
    std::error_code ec;
    fs::create_directories(ws, ec);
    if (ec) throw ResearchError(ResearchError::Kind::external_tool_failure, "ExternalToolFailure: cannot create " + ws.string());
    detail::write_file_atomic(ws / "main.tex", render_latex(doc));

    std::string cmd = *options.command;
    for (auto at = cmd.find("{workspace}"); at != std::string::npos; at = cmd.find("{workspace}"))
      cmd.replace(at, std::string_view("{workspace}").size(), ws.string());
    auto log_path = ws / "compile.log";
    std::string shell = "cd '" + ws.string() + "' && (" + cmd + ") > '" + log_path.string() + "' 2>&1";
    int raw = std::system(shell.c_str());
    if (raw == -1)
      throw ResearchError(ResearchError::Kind::external_tool_failure, "ExternalToolFailure: could not start shell");
    int status = WIFEXITED(raw) ? WEXITSTATUS(raw) : 128;
    if (status == 127 || status == 126)
      throw ResearchError(ResearchError::Kind::external_tool_failure,
                          "ExternalToolFailure: command not runnable (exit " + std::to_string(status) + ")");
    std::string log;
    try {
      log = detail::read_file(log_path);
    } catch (const Error&) {
    }
    if (log.size() > 4000) log = log.substr(log.size() - 4000);
    diags.push_back({Diagnostic::Kind::external_tool, "", 0, "exit status " + std::to_string(status)});
    if (!log.empty()) diags.push_back({Diagnostic::Kind::external_tool, "", 0, log});
  }
  return diags;
}

PaperDoc verify_citations(const PaperDoc& doc, const SearchProvider& provider) {
  if (doc.references.empty()) return doc;
  PaperDoc out = doc;
  out.references.clear();
  std::set<std::string, std::less<>> removed;
  for (const auto& ref : doc.references) {
    auto terms = query_terms(ref.title);
    std::string query;
    for (const auto& t : terms) query += (query.empty() ? "" : " ") + t;
    bool found = false;
    for (const auto& hit : provider.search(query, 5)) {
      bool year_ok = !ref.year || !hit.year || *ref.year == *hit.year;
      if (year_ok && title_similarity(ref.title, hit.title) >= 0.8) {
        found = true;
        break;
      }
    }
    if (found) {
      RefEntry kept = ref;
      kept.verified = true;
      out.references.push_back(std::move(kept));
    } else {
      removed.insert(ref.key);
    }
  }
  if (removed.empty()) return out;

  for (auto& s : out.sections) {
    for (auto& p : s.paragraphs) {
      auto uses = find_citations(p);
      // Rewrite back to front so earlier offsets stay valid.
      for (auto it = uses.rbegin(); it != uses.rend(); ++it) {
        std::vector<std::string> keep;
        for (const auto& k : it->keys)
          if (!removed.count(k)) keep.push_back(k);
        if (keep.size() == it->keys.size()) continue;
        if (keep.empty()) {
          p.replace(it->begin, it->end - it->begin, kRemovedCitationToken);
          continue;
        }
        auto open = p.rfind('{', it->end - 1);
        std::string joined;
        for (const auto& k : keep) joined += (joined.empty() ? "" : ",") + k;
        p.replace(open + 1, it->end - 1 - (open + 1), joined);
      }
    }
  }
  return out;
}

ParsedResponse parse_section_response(std::string_view text) {
  ParsedResponse out;
  std::string body;

  // Pull fenced blocks: ```refs blocks are metadata, the first ```latex (or
  // untagged) block is the content.
  std::optional<std::string> content_block;
  std::string outside;
  std::size_t i = 0;
  while (i < text.size()) {
    auto fence = text.find("```", i);
    if (fence == std::string_view::npos) {
      outside += text.substr(i);
      break;
    }
    outside += text.substr(i, fence - i);
    auto eol = text.find('\n', fence);
    if (eol == std::string_view::npos) break;
    auto tag = detail::trim(text.substr(fence + 3, eol - fence - 3));
    auto close = text.find("```", eol + 1);
    if (close == std::string_view::npos) close = text.size();
    auto inner = text.substr(eol + 1, close - eol - 1);
    if (tag == "refs") {
      for (auto line : detail::split_lines(inner)) {
        if (detail::trim(line).empty()) continue;
        try {
          auto j = nlohmann::json::parse(line);
          RefEntry r;
          r.key = j.at("key").get<std::string>();
          r.title = j.value("title", r.key);
          if (auto y = j.find("year"); y != j.end() && y->is_number_integer()) r.year = y->get<int>();
          out.new_references.push_back(std::move(r));
        } catch (const nlohmann::json::exception&) {
          // Unparseable entries are dropped; their citations then show up as
          // undefined references in compile_check.
        }
      }
    } else if (!content_block) {
      content_block = std::string(inner);
    }
    i = close + 3;
  }
  body = content_block ? *content_block : outside;

  // A "Title:" line may precede the fenced block or open the body.
  for (std::string_view src : {std::string_view(outside), std::string_view(body)}) {
    for (auto line : detail::split_lines(src)) {
      auto t = detail::trim(line);
      if (t.starts_with("Title:") && !out.title) out.title = std::string(detail::trim(t.substr(6)));
    }
  }

  std::string cleaned;
  for (auto line : detail::split_lines(body)) {
    auto t = detail::trim(line);
    if (t.starts_with("Title:")) continue;
    if (t == "\\begin{abstract}" || t == "\\end{abstract}") continue;
    if (t.starts_with("\\section{") || t.starts_with("\\section*{")) continue;
    cleaned += line;
    cleaned += '\n';
  }

  std::string para;
  auto flush = [&] {
    auto p = collapse_lines(para);
    if (!p.empty()) out.paragraphs.push_back(std::move(p));
    para.clear();
  };
  for (auto line : detail::split_lines(cleaned)) {
    if (detail::trim(line).empty()) flush();
    else {
      para += line;
      para += '\n';
    }
  }
  flush();
  return out;
}

ResearchEngine::ResearchEngine(llm::Backend& backend, PromptSet prompts, ResearchOptions options)
    : backend_(backend), prompts_(std::move(prompts)), options_(options) {
  prompts_.require(PromptSet::research_templates());
  system_ = prompts_.render("research.system", {});
}

std::string ResearchEngine::call(std::string stage, std::string user, double temperature) const {
  auto req = llm::make_request(std::move(stage), system_, std::move(user), temperature, options_.max_tokens);
  return backend_.complete(req).text;
}

std::vector<Idea> ResearchEngine::generate_ideas(std::span<const std::string> keywords,
                                                 std::span<const SearchRecord> literature) const {
  std::string kw, lit;
  for (const auto& k : keywords) kw += (kw.empty() ? "" : ", ") + k;
  for (const auto& r : literature) {
    lit += "- " + r.title;
    if (r.year) lit += " (" + std::to_string(*r.year) + ")";
    if (r.abstract) lit += ": " + *r.abstract;
    lit += '\n';
  }
  if (lit.empty()) lit = "(none)";
  auto text = call(std::string(stage_tag::ideas), prompts_.render("research.ideas", {{"keywords", kw}, {"literature", lit}}),
                   options_.draft_temperature);
  std::vector<Idea> ideas;
  for (auto line : detail::split_lines(text)) {
    auto t = detail::trim(line);
    // Tolerate "1." / "-" prefixes even though the prompt asks for none.
    while (!t.empty() && (std::isdigit(static_cast<unsigned char>(t.front())) || t.front() == '.' || t.front() == '-' ||
                          t.front() == ')' || t.front() == '*'))
      t.remove_prefix(1);
    t = detail::trim(t);
    if (!t.empty()) ideas.push_back(Idea{std::string(t), std::nullopt, std::nullopt});
  }
  if (ideas.empty()) throw ResearchError(ResearchError::Kind::bad_response, "idea generation returned no ideas");
  return ideas;
}

std::vector<Idea> ResearchEngine::rank_ideas(std::span<const Idea> ideas,
                                             std::span<const std::string> keywords) const {
  std::string kw, list;
  for (const auto& k : keywords) kw += (kw.empty() ? "" : ", ") + k;
  for (std::size_t i = 0; i < ideas.size(); ++i) list += std::to_string(i + 1) + ". " + ideas[i].text + "\n";
  auto text = call(std::string(stage_tag::rank), prompts_.render("research.rank", {{"keywords", kw}, {"ideas", list}}),
                   options_.draft_temperature);

  std::vector<std::size_t> order;
  std::vector<bool> used(ideas.size(), false);
  std::size_t n = 0;
  bool in_num = false;
  auto push = [&] {
    if (in_num && n >= 1 && n <= ideas.size() && !used[n - 1]) {
      used[n - 1] = true;
      order.push_back(n - 1);
    }
    n = 0;
    in_num = false;
  };
  for (char c : text) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      n = std::min<std::size_t>(n * 10 + static_cast<std::size_t>(c - '0'), 1'000'000);
      in_num = true;
    } else {
      push();
    }
  }
  push();
  for (std::size_t i = 0; i < ideas.size(); ++i)
    if (!used[i]) order.push_back(i);

  std::vector<Idea> ranked;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    Idea idea = ideas[order[pos]];
    idea.rank_score = static_cast<double>(pos);
    ranked.push_back(std::move(idea));
  }
  return ranked;
}

Idea ResearchEngine::develop_idea(std::span<const std::string> keywords, std::span<const SearchRecord> literature,
                                  const EmbeddingBackend& embed, double threshold) const {
  auto ideas = generate_ideas(keywords, literature);
  auto unique = dedup_ideas(ideas, embed, threshold);
  if (unique.size() == 1) {
    unique.front().rank_score = 0.0;
    return unique.front();
  }
  return rank_ideas(unique, keywords).front();
}

PaperDoc ResearchEngine::draft_paper(const DraftInput& input) const {
  if (input.keywords.empty()) throw PreconditionError("draft_paper needs at least one keyword");
  PaperDoc doc;
  doc.authorship = Authorship::llm;
  for (const auto& k : input.keywords) doc.keywords.push_back(detail::to_lower(k));
  std::string kw;
  for (const auto& k : doc.keywords) kw += (kw.empty() ? "" : ", ") + k;
  const std::string idea = input.idea.value_or(kw);
  doc.id = "llm-" + llm::sha256_hex(kw + "\n" + idea).substr(0, 12);

  std::set<std::string> used_keys;
  std::string ref_list;
  for (const auto& r : input.references) {
    RefEntry e{ref_key_for(r, used_keys), r.title, r.year, false};
    ref_list += e.key + ": " + e.title + (e.year ? " (" + std::to_string(*e.year) + ")" : "") + "\n";
    doc.references.push_back(std::move(e));
  }
  if (ref_list.empty()) ref_list = "(none)";

  for (auto name : kSectionOrder) {
    std::string section(name);
    auto user = prompts_.render("research.section", {{"keywords", kw},
                                                     {"idea", idea},
                                                     {"section", section},
                                                     {"guidance", std::string(section_guidance().at(name))},
                                                     {"previous", render_sections(doc.sections)},
                                                     {"references", ref_list}});
    auto parsed = parse_section_response(call(stage_tag::draft(name), user, options_.draft_temperature));
    if (parsed.paragraphs.empty())
      throw ResearchError(ResearchError::Kind::empty_section, "EmptySection(" + section + ")", section);
    Section s{section, std::move(parsed.paragraphs)};

    if (options_.fix_malformed_sections) {
      if (auto diags = lint_section(s); !diags.empty()) {
        std::string list;
        for (const auto& d : diags)
          list += "- " + std::string(to_string(d.kind)) + " in paragraph " + std::to_string(d.paragraph + 1) + ": " +
                  d.message + "\n";
        auto fixed = parse_section_response(
            call(std::string(stage_tag::fix),
                 prompts_.render("research.fix", {{"section", section}, {"diagnostics", list}, {"text", render_section(s)}}),
                 options_.draft_temperature));
        if (!fixed.paragraphs.empty()) s.paragraphs = std::move(fixed.paragraphs);
      }
    }
    if (name == "Abstract") {
      doc.title = parsed.title.value_or(idea);
    }
    for (auto& r : parsed.new_references) {
      if (used_keys.insert(r.key).second) doc.references.push_back(std::move(r));
    }
    doc.sections.push_back(std::move(s));
  }
  validate(doc);
  return doc;
}

PaperDoc ResearchEngine::revise(const PaperDoc& doc, const review::ReviewBundle& bundle) const {
  PaperDoc out = doc;
  out.revision_index = doc.revision_index + 1;
  out.parent_id = doc.id;
  out.id = revision_id(lineage_root_id(doc.id), out.revision_index);

  const std::string paper = review::render_for_review(doc);
  const std::string comments = bundle.reviewer_comments();
  std::set<std::string> keys;
  for (const auto& r : out.references) keys.insert(r.key);

  for (auto& s : out.sections) {
    auto parsed = parse_section_response(call(
        std::string(stage_tag::revise),
        prompts_.render("research.revise",
                        {{"section", s.name}, {"section_text", render_section(s)}, {"paper", paper}, {"comments", comments}}),
        options_.revise_temperature));
    if (parsed.paragraphs.empty())
      throw ResearchError(ResearchError::Kind::empty_section, "EmptySection(" + s.name + ")", s.name);
    s.paragraphs = std::move(parsed.paragraphs);
    for (auto& r : parsed.new_references)
      if (keys.insert(r.key).second) out.references.push_back(std::move(r));
  }
  validate(out);
  return out;
}

PaperDoc ResearchEngine::polish(const PaperDoc& doc, const PolishSpec& spec) const {
  const std::size_t total = doc.paragraph_count();
  if (total == 0) throw PreconditionError("polish needs a document with at least one paragraph");
  auto selected = polish_selection(total, spec.ratio, spec.seed);
  if (selected.empty()) return doc;

  std::vector<std::string*> flat;
  PaperDoc out = doc;
  for (auto& s : out.sections)
    for (auto& p : s.paragraphs) flat.push_back(&p);

  auto rewrite = [&](std::size_t idx) {
    auto text = call(std::string(stage_tag::polish), prompts_.render("research.polish", {{"paragraph", *flat[idx]}}),
                     options_.polish_temperature);
    auto parsed = parse_section_response(text);
    std::string joined;
    for (const auto& p : parsed.paragraphs) joined += (joined.empty() ? "" : " ") + p;
    if (joined.empty())
      throw ResearchError(ResearchError::Kind::empty_section, "polish returned an empty paragraph", "polish");
    return joined;
  };

  std::vector<std::string> rewritten(selected.size());
  const std::size_t width = std::max<std::size_t>(1, options_.max_polish_concurrency);
  for (std::size_t start = 0; start < selected.size(); start += width) {
    const std::size_t end = std::min(selected.size(), start + width);
    std::vector<std::future<std::string>> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(std::async(std::launch::async, rewrite, selected[i]));
    for (auto& f : batch) f.wait();
    for (std::size_t i = start; i < end; ++i) rewritten[i] = batch[i - start].get();
  }
  for (std::size_t i = 0; i < selected.size(); ++i) *flat[selected[i]] = std::move(rewritten[i]);
  validate(out);
  return out;
}

}  // namespace revsim::research
