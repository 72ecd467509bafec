#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "revsim/analysis/syntax.hpp"
#include "revsim/docmodel.hpp"
#include "revsim/llm_gateway.hpp"
#include "revsim/search.hpp"

// Deterministic builders for the bundled test fixtures. Every responder is a
// pure function of the request, so replaying the recorded store through a
// ScriptedBackend reproduces the generating run exactly.
namespace revsim::fixtures {

// Sorted (key, content) store; written as NDJSON in key order.
using Store = std::map<std::string, std::string>;

std::string store_ndjson(const Store& store);
void merge(Store& into, const llm::RecordingBackend& recorded);

// Initial, updated, meta.
using Ratings = std::array<int, 7>;

// Review responder keyed on the "Manuscript:" and "Reviewer:" prompt lines.
std::string review_response(const llm::ChatRequest& req, const Ratings& ratings);

PaperDoc worked_paper();
Store worked_store();
Store ratings_store(const PaperDoc& doc, const Ratings& ratings);

// Demo corpus: five human papers ingested from LaTeX, four drafted llm papers.
struct Demo {
  std::map<std::string, std::string> latex;  // id -> source
  std::vector<research::SearchRecord> literature;
  std::vector<PaperDoc> corpus;
  Store store;
};
// Round at which each original id is first accepted; 0 means never.
const std::map<std::string, int>& demo_accept_round();
Demo build_demo();

// Mini-corpora with opposite stylistic profiles.
std::vector<PaperDoc> style_corpus(Authorship style, std::size_t n, std::uint64_t seed);
// Rule-based pseudo-parse of every segmented sentence.
std::vector<analysis::ParsedSentence> pseudo_parse(const PaperDoc& doc);

struct NegKeywordCorpus {
  std::vector<PaperDoc> docs;
  std::vector<std::size_t> planted;  // keywords planted per doc
  std::vector<double> scores;
};
NegKeywordCorpus negkw_corpus(std::size_t n, std::uint64_t seed);

PaperDoc polish_base();
std::string polish_response(const llm::ChatRequest& req);
Store polish_store(const PaperDoc& base);

// Writes every fixture file below `dir` (created when missing).
void write_all(const std::filesystem::path& dir);

}  // namespace revsim::fixtures
