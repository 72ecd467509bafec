#include "revsim/docmodel.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "io.hpp"

namespace revsim {

using nlohmann::json;

std::string_view to_string(Authorship a) {
  return a == Authorship::llm ? "llm" : "human";
}

Authorship authorship_from_string(std::string_view s) {
  if (s == "human") return Authorship::human;
  if (s == "llm") return Authorship::llm;
  throw Error("unknown authorship '" + std::string(s) + "'");
}

const Section* PaperDoc::find_section(std::string_view name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

std::size_t PaperDoc::paragraph_count() const {
  std::size_t n = 0;
  for (const auto& s : sections) n += s.paragraphs.size();
  return n;
}

std::string PaperDoc::full_text() const {
  std::string out;
  for (const auto& s : sections) {
    for (const auto& p : s.paragraphs) {
      if (!out.empty()) out += "\n\n";
      out += p;
    }
  }
  return out;
}

namespace {

std::string kind_label(CorpusError::Kind k) {
  switch (k) {
    case CorpusError::Kind::malformed_line: return "MalformedLine";
    case CorpusError::Kind::duplicate_id: return "DuplicateId";
    case CorpusError::Kind::invariant_violation: return "InvariantViolation";
    case CorpusError::Kind::io_failure: return "IoFailure";
    case CorpusError::Kind::missing_doc: return "MissingDoc";
    case CorpusError::Kind::missing_parent: return "MissingParent";
    case CorpusError::Kind::cycle_detected: return "CycleDetected";
  }
  return "CorpusError";
}

[[noreturn]] void violation(const PaperDoc& doc, const std::string& detail) {
  throw CorpusError(CorpusError::Kind::invariant_violation, doc.id, detail);
}

}  // namespace

CorpusError::CorpusError(Kind kind, std::string subject, std::string detail, std::size_t line)
    : Error(kind_label(kind) + "(" + (line ? "line " + std::to_string(line) : subject) + "): " + detail),
      kind_(kind),
      subject_(std::move(subject)),
      line_(line) {}

void validate(const PaperDoc& doc) {
  if (doc.id.empty()) violation(doc, "empty id");
  if (doc.revision_index < 0) violation(doc, "negative revision_index");
  if ((doc.revision_index == 0) != !doc.parent_id.has_value())
    violation(doc, "revision_index must be 0 exactly when parent_id is absent");
  if (doc.authorship == Authorship::llm && doc.keywords.empty())
    violation(doc, "llm-authored document without keywords");
  for (const auto& k : doc.keywords)
    if (detail::to_lower(k) != k) violation(doc, "keyword '" + k + "' is not lowercase");

  std::set<std::string, std::less<>> names;
  for (const auto& s : doc.sections) {
    if (!names.insert(s.name).second) violation(doc, "duplicate section '" + s.name + "'");
    if (s.paragraphs.empty()) violation(doc, "section '" + s.name + "' has no paragraphs");
    for (const auto& p : s.paragraphs) {
      if (detail::trim(p).empty()) violation(doc, "empty paragraph in section '" + s.name + "'");
      if (p.find("\n\n") != std::string::npos)
        violation(doc, "paragraph with internal blank line in section '" + s.name + "'");
    }
  }
  std::set<std::string, std::less<>> keys;
  for (const auto& r : doc.references)
    if (!keys.insert(r.key).second) violation(doc, "duplicate reference key '" + r.key + "'");
}

void to_json(json& j, const Section& s) {
  j = json{{"name", s.name}, {"paragraphs", s.paragraphs}};
}

void from_json(const json& j, Section& s) {
  j.at("name").get_to(s.name);
  j.at("paragraphs").get_to(s.paragraphs);
}

void to_json(json& j, const RefEntry& r) {
  j = json{{"key", r.key}, {"title", r.title}, {"verified", r.verified}};
  j["year"] = r.year ? json(*r.year) : json(nullptr);
}

void from_json(const json& j, RefEntry& r) {
  j.at("key").get_to(r.key);
  j.at("title").get_to(r.title);
  r.year.reset();
  if (auto it = j.find("year"); it != j.end() && !it->is_null()) r.year = it->get<int>();
  r.verified = j.value("verified", false);
}

void to_json(json& j, const PaperDoc& d) {
  j = json{
      {"id", d.id},
      {"title", d.title},
      {"keywords", d.keywords},
      {"authorship", to_string(d.authorship)},
      {"revision_index", d.revision_index},
      {"parent_id", d.parent_id ? json(*d.parent_id) : json(nullptr)},
      {"sections", d.sections},
      {"references", d.references},
  };
}

void from_json(const json& j, PaperDoc& d) {
  j.at("id").get_to(d.id);
  d.title = j.value("title", std::string{});
  d.keywords = j.value("keywords", std::vector<std::string>{});
  d.authorship = authorship_from_string(j.at("authorship").get<std::string>());
  d.revision_index = j.value("revision_index", 0);
  d.parent_id.reset();
  if (auto it = j.find("parent_id"); it != j.end() && !it->is_null())
    d.parent_id = it->get<std::string>();
  d.sections = j.value("sections", std::vector<Section>{});
  d.references = j.value("references", std::vector<RefEntry>{});
}

std::string to_ndjson_line(const PaperDoc& doc) {
  return json(doc).dump();
}

PaperDoc parse_document(std::string_view json_text) {
  PaperDoc doc = json::parse(json_text).get<PaperDoc>();
  validate(doc);
  return doc;
}

std::vector<PaperDoc> parse_corpus(std::string_view text, std::string_view origin) {
  std::vector<PaperDoc> docs;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    PaperDoc doc;
    try {
      doc = json::parse(line).get<PaperDoc>();
    } catch (const std::exception& e) {
      throw CorpusError(CorpusError::Kind::malformed_line, std::string(origin), e.what(), line_no);
    }
    validate(doc);
    if (!seen.insert(doc.id).second)
      throw CorpusError(CorpusError::Kind::duplicate_id, doc.id, "id appears more than once");
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<PaperDoc> read_corpus(const std::filesystem::path& path) {
  return parse_corpus(detail::read_file(path), path.string());
}

void write_corpus(std::span<const PaperDoc> docs, const std::filesystem::path& path) {
  std::string out;
  for (const auto& d : docs) {
    validate(d);
    out += to_ndjson_line(d);
    out += '\n';
  }
  detail::write_file_atomic(path, out);
}

std::vector<PaperDoc> lineage(std::span<const PaperDoc> corpus, std::string_view id) {
  std::unordered_map<std::string_view, const PaperDoc*> by_id;
  for (const auto& d : corpus) by_id.emplace(d.id, &d);

  auto it = by_id.find(id);
  if (it == by_id.end())
    throw CorpusError(CorpusError::Kind::missing_doc, std::string(id), "not in corpus");

  std::vector<PaperDoc> chain;
  std::unordered_set<std::string_view> visited;
  const PaperDoc* cur = it->second;
  while (true) {
    if (!visited.insert(cur->id).second)
      throw CorpusError(CorpusError::Kind::cycle_detected, std::string(id),
                        "parent pointers revisit '" + cur->id + "'");
    chain.push_back(*cur);
    if (!cur->parent_id) break;
    auto parent = by_id.find(*cur->parent_id);
    if (parent == by_id.end())
      throw CorpusError(CorpusError::Kind::missing_parent, cur->id,
                        "parent '" + *cur->parent_id + "' not in corpus");
    cur = parent->second;
  }
  std::reverse(chain.begin(), chain.end());
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (chain[i].revision_index != static_cast<int>(i))
      throw CorpusError(CorpusError::Kind::invariant_violation, chain[i].id,
                        "revision_index does not increase by 1 along the lineage");
  }
  return chain;
}

std::string lineage_root_id(std::string_view id) {
  auto at = id.rfind("@v");
  if (at == std::string_view::npos || at + 2 == id.size()) return std::string(id);
  int n = 0;
  auto tail = id.substr(at + 2);
  auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), n);
  if (ec != std::errc{} || p != tail.data() + tail.size()) return std::string(id);
  return std::string(id.substr(0, at));
}

std::string revision_id(std::string_view root_id, int revision_index) {
  if (revision_index == 0) return std::string(root_id);
  return std::string(root_id) + "@v" + std::to_string(revision_index);
}

namespace detail {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(CorpusError::Kind::io_failure, path.string(), "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CorpusError(CorpusError::Kind::io_failure, path.string(), "cannot open for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw CorpusError(CorpusError::Kind::io_failure, path.string(), "write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw CorpusError(CorpusError::Kind::io_failure, path.string(), "rename failed");
  }
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = nl + 1;
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n\f\v";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

}  // namespace detail
}  // namespace revsim
