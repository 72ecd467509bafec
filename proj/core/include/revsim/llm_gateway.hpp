#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "revsim/error.hpp"

namespace revsim::llm {

enum class Role { system, user, assistant };

std::string_view to_string(Role r);

struct ChatMessage {
  Role role = Role::user;
  std::string content;
};

struct ChatRequest {
  std::string stage_tag;
  std::vector<ChatMessage> messages;
  double temperature = 1.0;
  int max_tokens = 4096;
};

struct TokenUsage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct Completion {
  std::string text;
  TokenUsage usage;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{500};
  double multiplier = 2.0;
};

// Delay before retry number `attempt` (1-based: the wait after the first
// failure is delay_for(policy, 1) == base_delay).
std::chrono::milliseconds delay_for(const RetryPolicy& policy, int attempt);

class GatewayError : public Error {
 public:
  enum class Kind { invalid_request, missing_fixture, transport, bad_status, exhausted };

  GatewayError(Kind kind, std::string message, int status = 0, int attempts = 0)
      : Error(std::move(message)), kind_(kind), status_(status), attempts_(attempts) {}

  Kind kind() const noexcept { return kind_; }
  int status() const noexcept { return status_; }
  int attempts() const noexcept { return attempts_; }

 private:
  Kind kind_;
  int status_;
  int attempts_;
};

// Throws GatewayError(invalid_request) when the request breaks its invariants.
void validate(const ChatRequest& request);
void validate(const RetryPolicy& policy);

/// Canonical serialization hashed by fixture_key: the stage tag, a newline,
/// then `role:content` for each message joined by newlines.
std::string canonical_serialization(const ChatRequest& request);

/// Lowercase hex SHA-256 of canonical_serialization(request).
std::string fixture_key(const ChatRequest& request);

std::string sha256_hex(std::string_view data);

/// Model access contract. Implementations must be safe to call from several
/// threads at once.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual Completion complete(const ChatRequest& request) = 0;
  virtual std::string describe() const = 0;
};

/// Replays responses recorded under fixture_key(). Read-only after loading.
class ScriptedBackend final : public Backend {
 public:
  ScriptedBackend() = default;

  // Loads an NDJSON store of {key, content} records. Later records with the
  // same key replace earlier ones.
  static ScriptedBackend from_file(const std::filesystem::path& path);

  void add(std::string key, std::string content);
  void add(const ChatRequest& request, std::string content);
  std::size_t size() const { return fixtures_.size(); }
  bool contains(std::string_view key) const;

  Completion complete(const ChatRequest& request) override;
  std::string describe() const override { return "scripted"; }

 private:
  std::unordered_map<std::string, std::string> fixtures_;
};

/// Adapts a plain function; used for programmatic responders.
class CallbackBackend final : public Backend {
 public:
  using Fn = std::function<std::string(const ChatRequest&)>;
  explicit CallbackBackend(Fn fn, std::string name = "callback")
      : fn_(std::move(fn)), name_(std::move(name)) {}

  Completion complete(const ChatRequest& request) override { return {fn_(request), {}}; }
  std::string describe() const override { return name_; }

 private:
  Fn fn_;
  std::string name_;
};

/// Counts calls per stage tag while forwarding to another backend.
class CountingBackend final : public Backend {
 public:
  explicit CountingBackend(Backend& inner) : inner_(inner) {}

  Completion complete(const ChatRequest& request) override;
  std::string describe() const override { return "counting(" + inner_.describe() + ")"; }

  long total() const { return total_.load(); }
  long count(std::string_view stage_tag) const;

 private:
  Backend& inner_;
  std::atomic<long> total_{0};
  mutable std::mutex mu_;
  std::map<std::string, long, std::less<>> per_stage_;
};

/// Forwards to another backend and keeps every (key, response) pair so a live
/// run can be replayed offline by ScriptedBackend.
class RecordingBackend final : public Backend {
 public:
  explicit RecordingBackend(Backend& inner) : inner_(inner) {}

  Completion complete(const ChatRequest& request) override;
  std::string describe() const override { return "recording(" + inner_.describe() + ")"; }

  // Records in first-seen order, one JSON object per line.
  std::string to_ndjson() const;
  void save(const std::filesystem::path& path) const;
  std::size_t size() const;

 private:
  Backend& inner_;
  mutable std::mutex mu_;
  std::vector<std::pair<std::string, std::string>> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct HttpOptions {
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string api_key;
  std::string model;
  RetryPolicy retry;
  std::chrono::seconds timeout{120};
  // Replaced in tests to observe backoff without waiting.
  std::function<void(std::chrono::milliseconds)> sleep;
};

/// OpenAI-compatible chat-completions client with exponential backoff.
/// Transport errors, 429 and 5xx are retried; other statuses fail at once.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpOptions options);
  ~HttpBackend() override;

  // Reads REVSIM_API_BASE and REVSIM_API_KEY; throws GatewayError when unset.
  static HttpOptions options_from_env(std::string model, RetryPolicy retry);

  Completion complete(const ChatRequest& request) override;
  std::string describe() const override { return "http(" + options_.model + ")"; }

  long attempts_made() const { return attempts_.load(); }

 private:
  HttpOptions options_;
  std::string host_;
  std::string path_prefix_;
  std::atomic<long> attempts_{0};
};

// Helpers for building requests.
ChatRequest make_request(std::string stage_tag, std::string system, std::string user,
                         double temperature, int max_tokens = 4096);

}  // namespace revsim::llm
