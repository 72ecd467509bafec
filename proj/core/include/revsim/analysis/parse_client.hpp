#pragma once

#include <chrono>
#include <mutex>
#include <string>
#include <vector>

#include "revsim/analysis/syntax.hpp"

namespace revsim::analysis {

class ParseAdapterError : public Error {
 public:
  enum class Kind { spawn_failed, timeout, exited, protocol, adapter_error };

  ParseAdapterError(Kind kind, std::string message) : Error(std::move(message)), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Client side of the dependency-parse adapter: one subprocess spoken to in
/// NDJSON over its stdin/stdout. Requests are serialized, so one client may
/// be shared between threads; run several clients for parallel parsing.
class ParseClient final : public SentenceParser {
 public:
  // argv[0] is looked up on PATH.
  explicit ParseClient(std::vector<std::string> argv,
                       std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));
  ~ParseClient() override;

  ParseClient(const ParseClient&) = delete;
  ParseClient& operator=(const ParseClient&) = delete;

  // Adapter version string from the ping handshake.
  std::string ping();

  /// Parses pre-tokenized sentences; the adapter must not re-tokenize. Every
  /// returned record is validated and carries the input tokens.
  std::vector<ParsedSentence> parse(const std::vector<std::vector<std::string>>& sentences) override;

  // Sends a raw line and returns the raw response line; for protocol tests.
  std::string exchange_raw(const std::string& line);

 private:
  void send_line(const std::string& line);
  std::string read_line();
  std::string roundtrip(const std::string& line);

  std::mutex mu_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  long next_id_ = 1;
  std::string buffer_;
  std::chrono::milliseconds timeout_;
};

}  // namespace revsim::analysis
