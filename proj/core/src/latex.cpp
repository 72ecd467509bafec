#include "revsim/latex.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

#include "io.hpp"

namespace revsim {

namespace {

constexpr std::array kCiteCommands = {
    "cite", "citep", "citet", "citealp", "citealt", "citeauthor", "citeyear", "parencite",
    "textcite", "autocite", "Cite", "Citep", "Citet",
};

// Commands whose single braced argument carries no prose.
constexpr std::array kDropWithArg = {
    "label", "ref", "eqref", "autoref", "cref", "Cref", "pageref", "footnote", "url",
    "includegraphics", "vspace", "hspace", "bibliographystyle", "bibliography", "input",
    "include", "thanks", "nocite", "newcommand", "renewcommand", "usepackage", "documentclass",
    "setlength", "addtolength", "definecolor", "hypersetup", "author", "title", "date",
    "affiliation", "email", "address", "icml", "iclrfinalcopy",
};

// Heading commands: the title is dropped, the body continues.
constexpr std::array kHeadings = {
    "subsection", "subsubsection", "paragraph", "subparagraph", "caption",
};

constexpr std::array kNonProseEnvironments = {
    "figure", "figure*", "table", "table*", "equation", "equation*", "align", "align*",
    "gather", "gather*", "multline", "multline*", "eqnarray", "eqnarray*", "tabular",
    "tabular*", "tabularx", "algorithm", "algorithm*", "algorithmic", "lstlisting", "verbatim",
    "tikzpicture", "wrapfigure", "wraptable", "displaymath", "math", "subfigure", "minted",
    "thebibliography", "tcolorbox",
};

template <std::size_t N>
bool contains(const std::array<const char*, N>& set, std::string_view name) {
  return std::any_of(set.begin(), set.end(), [&](const char* s) { return name == s; });
}

bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

// Index of the brace closing the group opened at `open`, or npos.
std::size_t match_brace(std::string_view s, std::size_t open, char lb = '{', char rb = '}') {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (c == '\\') {
      ++i;
      continue;
    }
    if (c == lb) ++depth;
    else if (c == rb && --depth == 0) return i;
  }
  return std::string_view::npos;
}

std::size_t skip_spaces(std::string_view s, std::size_t i) {
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return i;
}

std::string remove_comments(std::string_view s, IngestReport* report) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      out += s[i];
      out += s[++i];
      continue;
    }
    if (s[i] == '%') {
      if (report) ++report->comments_removed;
      while (i < s.size() && s[i] != '\n') ++i;
      // A comment swallows its newline in TeX; keep it so blank-line
      // paragraph breaks survive.
      if (i < s.size()) out += '\n';
      continue;
    }
    out += s[i];
  }
  return out;
}

// Position just past the \end{name} matching a \begin{name} whose argument
// ends at `from`; nested environments of the same name are counted.
std::size_t find_env_end(std::string_view s, std::size_t from, std::string_view name) {
  const std::string begin_tag = "\\begin{" + std::string(name) + "}";
  const std::string end_tag = "\\end{" + std::string(name) + "}";
  int depth = 1;
  std::size_t i = from;
  while (i < s.size()) {
    auto b = s.find(begin_tag, i);
    auto e = s.find(end_tag, i);
    if (e == std::string_view::npos) return s.size();
    if (b != std::string_view::npos && b < e) {
      ++depth;
      i = b + begin_tag.size();
      continue;
    }
    if (--depth == 0) return e + end_tag.size();
    i = e + end_tag.size();
  }
  return s.size();
}

class InlineRenderer {
 public:
  explicit InlineRenderer(IngestReport* report) : report_(report) {}

  std::string render(std::string_view s) {
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
      char c = s[i];
      if (c == '\\') {
        i = command(s, i, out);
      } else if (c == '$') {
        i = math(s, i);
      } else if (c == '{' || c == '}') {
        ++i;
      } else if (c == '~') {
        out += ' ';
        ++i;
      } else if (c == '%') {
        while (i < s.size() && s[i] != '\n') ++i;
      } else if ((c == '`' || c == '\'') && i + 1 < s.size() && s[i + 1] == c) {
        out += '"';
        i += 2;
      } else {
        out += c;
        ++i;
      }
    }
    return out;
  }

 private:
  IngestReport* report_;

  std::size_t math(std::string_view s, std::size_t i) {
    bool display = i + 1 < s.size() && s[i + 1] == '$';
    std::size_t j = i + (display ? 2 : 1);
    while (j < s.size()) {
      if (s[j] == '\\') {
        j += 2;
        continue;
      }
      if (s[j] == '$') break;
      ++j;
    }
    if (report_) ++report_->math_spans_removed;
    if (j >= s.size()) return s.size();
    return j + (display ? 2 : 1);
  }

  std::size_t skip_optional(std::string_view s, std::size_t i) {
    i = skip_spaces(s, i);
    while (i < s.size() && s[i] == '[') {
      auto close = match_brace(s, i, '[', ']');
      if (close == std::string_view::npos) return i;
      i = skip_spaces(s, close + 1);
    }
    return i;
  }

  // Returns the position after one braced argument; `arg` receives its body.
  std::size_t take_arg(std::string_view s, std::size_t i, std::string_view* arg) {
    i = skip_optional(s, i);
    if (i >= s.size() || s[i] != '{') return i;
    auto close = match_brace(s, i);
    if (close == std::string_view::npos) {
      if (arg) *arg = s.substr(i + 1);
      return s.size();
    }
    if (arg) *arg = s.substr(i + 1, close - i - 1);
    return close + 1;
  }

  std::size_t command(std::string_view s, std::size_t i, std::string& out) {
    std::size_t j = i + 1;
    if (j >= s.size()) return j;
    if (!is_letter(s[j])) {
      char c = s[j];
      if (c == '\\') out += ' ';
      else if (c == '[') return skip_display(s, j + 1, "\\]");
      else if (c == '(') return skip_display(s, j + 1, "\\)");
      else if (c == ',' || c == ';' || c == ' ') out += ' ';
      else if (c != '-' && c != '/') out += c;
      return j + 1;
    }
    while (j < s.size() && is_letter(s[j])) ++j;
    std::string_view name = s.substr(i + 1, j - i - 1);
    if (j < s.size() && s[j] == '*') ++j;

    if (contains(kCiteCommands, name)) {
      j = take_arg(s, j, nullptr);
      out += kCitationToken;
      if (report_) ++report_->citations_replaced;
      return j;
    }
    if (name == "begin") {
      std::string_view env;
      j = take_arg(s, j, &env);
      if (contains(kNonProseEnvironments, env)) {
        if (report_) ++report_->environments_removed[std::string(env)];
        return find_env_end(s, j, env);
      }
      return j;
    }
    if (name == "end") return take_arg(s, j, nullptr);
    if (contains(kDropWithArg, name) || contains(kHeadings, name)) {
      return take_arg(s, j, nullptr);
    }
    if (name == "href" || name == "textcolor" || name == "colorbox") {
      j = take_arg(s, j, nullptr);
      std::string_view body;
      j = take_arg(s, j, &body);
      out += render(body);
      return j;
    }
    if (name == "item") {
      out += ' ';
      return skip_optional(s, j);
    }
    if (name == "LaTeX") {
      out += "LaTeX";
      return j;
    }
    if (name == "TeX") {
      out += "TeX";
      return j;
    }
    if (name == "ldots" || name == "dots") {
      out += "...";
      return j;
    }
    // Formatting and unknown commands: keep the text of braced arguments.
    std::size_t k = skip_optional(s, j);
    bool any = false;
    while (k < s.size() && s[k] == '{') {
      std::string_view body;
      k = take_arg(s, k, &body);
      if (any) out += ' ';
      out += render(body);
      any = true;
      k = skip_spaces(s, k);
      if (k < s.size() && s[k] != '{') break;
    }
    if (!any) {
      // Swallow the single space TeX eats after a control word.
      if (j < s.size() && s[j] == ' ') ++j;
      return j;
    }
    return k;
  }

  std::size_t skip_display(std::string_view s, std::size_t from, std::string_view closer) {
    auto e = s.find(closer, from);
    if (report_) ++report_->math_spans_removed;
    return e == std::string_view::npos ? s.size() : e + closer.size();
  }
};

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

std::vector<std::string> split_paragraphs(std::string_view rendered) {
  std::vector<std::string> paras;
  std::string current;
  auto flush = [&] {
    auto p = collapse_whitespace(current);
    if (!p.empty()) paras.push_back(std::move(p));
    current.clear();
  };
  for (auto line : detail::split_lines(rendered)) {
    if (detail::trim(line).empty()) {
      flush();
    } else {
      current += line;
      current += '\n';
    }
  }
  flush();
  return paras;
}

std::optional<std::string> command_arg(std::string_view s, std::string_view cmd) {
  const std::string tag = "\\" + std::string(cmd) + "{";
  auto at = s.find(tag);
  if (at == std::string_view::npos) return std::nullopt;
  auto open = at + tag.size() - 1;
  auto close = match_brace(s, open);
  if (close == std::string_view::npos) return std::nullopt;
  return std::string(s.substr(open + 1, close - open - 1));
}

bool is_back_matter(std::string_view name) {
  auto lower = detail::to_lower(name);
  return lower == "acknowledgments" || lower == "acknowledgements" || lower == "acknowledgment" ||
         lower == "references" || lower == "appendix" || lower == "appendices" ||
         lower == "reproducibility statement" || lower == "ethics statement";
}

}  // namespace

std::string strip_latex(std::string_view paragraph, IngestReport* report) {
  InlineRenderer r(report);
  return collapse_whitespace(r.render(paragraph));
}

std::vector<CitationUse> find_citations(std::string_view text) {
  std::vector<CitationUse> uses;
  std::size_t i = 0;
  while ((i = text.find('\\', i)) != std::string_view::npos) {
    std::size_t j = i + 1;
    while (j < text.size() && is_letter(text[j])) ++j;
    auto name = text.substr(i + 1, j - i - 1);
    if (name.empty()) {
      i += 2;
      continue;
    }
    if (!contains(kCiteCommands, name)) {
      i = j;
      continue;
    }
    if (j < text.size() && text[j] == '*') ++j;
    j = skip_spaces(text, j);
    while (j < text.size() && text[j] == '[') {
      auto close = match_brace(text, j, '[', ']');
      if (close == std::string_view::npos) break;
      j = skip_spaces(text, close + 1);
    }
    if (j >= text.size() || text[j] != '{') {
      i = j;
      continue;
    }
    auto close = match_brace(text, j);
    if (close == std::string_view::npos) break;
    CitationUse use{i, close + 1, {}};
    auto body = text.substr(j + 1, close - j - 1);
    std::size_t start = 0;
    while (start <= body.size()) {
      auto comma = body.find(',', start);
      if (comma == std::string_view::npos) comma = body.size();
      auto key = detail::trim(body.substr(start, comma - start));
      if (!key.empty()) use.keys.emplace_back(key);
      start = comma + 1;
    }
    uses.push_back(std::move(use));
    i = close + 1;
  }
  return uses;
}

std::vector<RefEntry> parse_bibtex(std::string_view bib) {
  std::vector<RefEntry> refs;
  std::set<std::string> keys;
  std::size_t i = 0;
  while ((i = bib.find('@', i)) != std::string_view::npos) {
    auto open = bib.find('{', i);
    if (open == std::string_view::npos) break;
    auto type = detail::to_lower(detail::trim(bib.substr(i + 1, open - i - 1)));
    auto close = match_brace(bib, open);
    if (close == std::string_view::npos) break;
    auto body = bib.substr(open + 1, close - open - 1);
    i = close + 1;
    if (type == "comment" || type == "string" || type == "preamble") continue;

    auto comma = body.find(',');
    RefEntry ref;
    ref.key = std::string(detail::trim(body.substr(0, comma)));
    if (ref.key.empty() || !keys.insert(ref.key).second) continue;
    std::string_view fields = comma == std::string_view::npos ? std::string_view{} : body.substr(comma + 1);

    auto field = [&](std::string_view name) -> std::optional<std::string> {
      std::size_t p = 0;
      while (p < fields.size()) {
        auto eq = fields.find('=', p);
        if (eq == std::string_view::npos) return std::nullopt;
        auto fname = detail::to_lower(detail::trim(fields.substr(p, eq - p)));
        std::size_t v = skip_spaces(fields, eq + 1);
        while (v < fields.size() && std::isspace(static_cast<unsigned char>(fields[v]))) ++v;
        std::string value;
        std::size_t end = v;
        if (v < fields.size() && fields[v] == '{') {
          auto c = match_brace(fields, v);
          if (c == std::string_view::npos) return std::nullopt;
          value = std::string(fields.substr(v + 1, c - v - 1));
          end = c + 1;
        } else if (v < fields.size() && fields[v] == '"') {
          auto c = fields.find('"', v + 1);
          if (c == std::string_view::npos) return std::nullopt;
          value = std::string(fields.substr(v + 1, c - v - 1));
          end = c + 1;
        } else {
          end = fields.find(',', v);
          if (end == std::string_view::npos) end = fields.size();
          value = std::string(detail::trim(fields.substr(v, end - v)));
        }
        if (fname == name) return value;
        auto next = fields.find(',', end);
        if (next == std::string_view::npos) return std::nullopt;
        p = next + 1;
      }
      return std::nullopt;
    };

    if (auto t = field("title")) ref.title = strip_latex(*t);
    if (auto y = field("year")) {
      try {
        ref.year = std::stoi(*y);
      } catch (const std::exception&) {
      }
    }
    if (ref.title.empty()) ref.title = ref.key;
    refs.push_back(std::move(ref));
  }
  return refs;
}

IngestResult ingest_latex(std::string_view source, const IngestOptions& options) {
  IngestResult result;
  auto& report = result.report;
  report.rules = {
      "comments removed",
      "inline and display math removed",
      "float, tabular, algorithm and verbatim environments removed",
      "citation commands replaced by " + std::string(kCitationToken),
      "formatting commands unwrapped to their text",
      "content after \\appendix dropped",
      "acknowledgment, reference and statement sections dropped",
  };

  std::string text = remove_comments(source, &report);
  std::string_view body = text;

  std::string title = command_arg(body, "title").value_or(options.fallback_title);

  if (auto b = body.find("\\begin{document}"); b != std::string_view::npos) {
    body = body.substr(b + std::string_view("\\begin{document}").size());
    if (auto e = body.find("\\end{document}"); e != std::string_view::npos) body = body.substr(0, e);
  }
  if (auto a = body.find("\\appendix"); a != std::string_view::npos) {
    body = body.substr(0, a);
    report.appendix_dropped = true;
  }

  PaperDoc& doc = result.doc;
  doc.id = options.id;
  doc.title = strip_latex(title);
  doc.keywords = options.keywords;
  doc.authorship = options.authorship;
  if (options.bibtex) doc.references = parse_bibtex(*options.bibtex);

  InlineRenderer renderer(&report);
  auto add_section = [&](std::string name, std::string_view raw) {
    if (is_back_matter(name)) {
      report.sections_dropped.push_back(name);
      return;
    }
    auto paragraphs = split_paragraphs(renderer.render(raw));
    if (paragraphs.empty()) return;
    std::string unique = name;
    for (int n = 2; doc.find_section(unique); ++n) unique = name + " (" + std::to_string(n) + ")";
    doc.sections.push_back(Section{std::move(unique), std::move(paragraphs)});
  };

  // Abstract environment first, then \section splits.
  std::string remaining(body);
  if (auto b = remaining.find("\\begin{abstract}"); b != std::string::npos) {
    auto start = b + std::string_view("\\begin{abstract}").size();
    auto e = remaining.find("\\end{abstract}", start);
    if (e == std::string::npos) e = remaining.size();
    add_section("Abstract", std::string_view(remaining).substr(start, e - start));
    auto tail = e == remaining.size() ? e : e + std::string_view("\\end{abstract}").size();
    remaining.erase(b, tail - b);
  }

  std::string_view rest = remaining;
  auto next_section = [](std::string_view s, std::size_t from) {
    std::size_t p = from;
    while ((p = s.find("\\section", p)) != std::string_view::npos) {
      auto q = p + std::string_view("\\section").size();
      if (q < s.size() && (s[q] == '{' || s[q] == '*' || s[q] == '[' || s[q] == ' ')) return p;
      p = q;
    }
    return std::string_view::npos;
  };
  auto pos = next_section(rest, 0);
  while (pos != std::string_view::npos) {
    std::size_t q = pos + std::string_view("\\section").size();
    if (q < rest.size() && rest[q] == '*') ++q;
    q = skip_spaces(rest, q);
    while (q < rest.size() && rest[q] == '[') {
      auto close = match_brace(rest, q, '[', ']');
      if (close == std::string_view::npos) break;
      q = skip_spaces(rest, close + 1);
    }
    std::string name;
    if (q < rest.size() && rest[q] == '{') {
      auto close = match_brace(rest, q);
      if (close == std::string_view::npos) break;
      name = strip_latex(rest.substr(q + 1, close - q - 1));
      q = close + 1;
    }
    auto next = next_section(rest, q);
    auto end = next == std::string_view::npos ? rest.size() : next;
    add_section(name.empty() ? "Untitled" : name, rest.substr(q, end - q));
    pos = next;
  }
  if (doc.sections.empty()) {
    // No sectioning at all: treat the whole body as one section.
    add_section("Body", rest);
  }

  validate(doc);
  return result;
}

}  // namespace revsim
