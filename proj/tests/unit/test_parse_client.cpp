#include <doctest.h>

#include <chrono>
#include <functional>

#include <nlohmann/json.hpp>

#include "revsim/analysis/parse_client.hpp"
#include "revsim/analysis/syntax.hpp"

using namespace revsim;
using namespace revsim::analysis;
using namespace std::chrono_literals;

namespace {

std::vector<std::string> stub(const std::string& mode = "ok") {
  return {REVSIM_PYTHON, std::string(REVSIM_STUB_DIR) + "/parse_adapter_stub.py", "--mode", mode};
}

ParseAdapterError::Kind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ParseAdapterError& e) {
    return e.kind();
  }
  FAIL("no ParseAdapterError thrown");
  return ParseAdapterError::Kind::protocol;
}

const std::vector<std::vector<std::string>> kSentences{
    {"We", "stopped", "because", "it", "rained"},
    {"Short"},
    {"The", "model", "which", "we", "trained", "works"},
};

}  // namespace

TEST_CASE("ping handshake") {
  ParseClient c(stub());
  CHECK(c.ping() == "stub-1");
  CHECK(c.ping() == "stub-1");
}

TEST_CASE("parse returns validated records aligned to the input tokens") {
  ParseClient c(stub());
  auto out = c.parse(kSentences);
  REQUIRE(out.size() == 3);
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].tokens == kSentences[i]);
    CHECK(out[i].heads.size() == kSentences[i].size());
    CHECK(out[i].labels.size() == kSentences[i].size());
    validate(out[i]);
  }
  CHECK(out[0].labels[2] == "mark");
  CHECK(out[0].labels[3] == "advcl");
  CHECK(out[2].labels[3] == "acl:relcl");
  // Chain heads give unit distance; 2 clause labels among 12 tokens.
  CHECK(mean_dep_distance(out) == 1.0);
  CHECK(subclause_ratio(out) == doctest::Approx(2.0 / 12.0));
  CHECK(c.parse({}).empty());
  // The session stays usable after a parse.
  CHECK(c.ping() == "stub-1");
}

TEST_CASE("malformed request lines get an error reply") {
  ParseClient c(stub());
  auto reply = nlohmann::json::parse(c.exchange_raw("{not json"));
  CHECK(reply["id"].is_null());
  CHECK(reply["error"] == "malformed");
  auto unknown = nlohmann::json::parse(c.exchange_raw(R"({"id": 5, "op": "dance"})"));
  CHECK(unknown["id"] == 5);
  CHECK(unknown.contains("error"));
  CHECK(c.ping() == "stub-1");
}

TEST_CASE("an adapter error reply is surfaced") {
  ParseClient c(stub("refuse"));
  CHECK(kind_of([&] { c.parse(kSentences); }) == ParseAdapterError::Kind::adapter_error);
  // Empty sentences are refused before anything is sent.
  ParseClient ok(stub());
  CHECK_THROWS_AS(ok.parse({{"ok"}, {}}), Error);
  CHECK(ok.ping() == "stub-1");
}

TEST_CASE("invalid heads are a protocol error") {
  ParseClient c(stub("bad-heads"));
  CHECK(kind_of([&] { c.parse(kSentences); }) == ParseAdapterError::Kind::protocol);
}

TEST_CASE("mismatched response ids are a protocol error") {
  ParseClient c(stub("wrong-id"));
  CHECK(kind_of([&] { c.parse(kSentences); }) == ParseAdapterError::Kind::protocol);
}

TEST_CASE("a silent adapter times out") {
  ParseClient c(stub("hang"), 300ms);
  const auto start = std::chrono::steady_clock::now();
  CHECK(kind_of([&] { c.parse(kSentences); }) == ParseAdapterError::Kind::timeout);
  CHECK(std::chrono::steady_clock::now() - start < 10s);
}

TEST_CASE("an adapter that exits is reported") {
  ParseClient c(stub("exit-on-parse"));
  CHECK(c.ping() == "stub-1");
  CHECK(kind_of([&] { c.parse(kSentences); }) == ParseAdapterError::Kind::exited);
}

TEST_CASE("a missing executable fails to spawn") {
  CHECK(kind_of([] {
          ParseClient c({"revsim-no-such-parser-binary"});
          c.ping();
        }) == ParseAdapterError::Kind::spawn_failed);
  CHECK_THROWS_AS(ParseClient({}), Error);
}
