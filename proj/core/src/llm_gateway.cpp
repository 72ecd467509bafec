#include "revsim/llm_gateway.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "io.hpp"
#include "revsim/docmodel.hpp"

namespace revsim::llm {

using nlohmann::json;

std::string_view to_string(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

std::chrono::milliseconds delay_for(const RetryPolicy& policy, int attempt) {
  double ms = static_cast<double>(policy.base_delay.count()) *
              std::pow(policy.multiplier, static_cast<double>(std::max(attempt, 1) - 1));
  return std::chrono::milliseconds(static_cast<long long>(std::llround(ms)));
}

void validate(const ChatRequest& request) {
  if (request.messages.empty())
    throw GatewayError(GatewayError::Kind::invalid_request, "request '" + request.stage_tag + "' has no messages");
  for (const auto& m : request.messages)
    if (m.content.empty())
      throw GatewayError(GatewayError::Kind::invalid_request,
                         "request '" + request.stage_tag + "' has an empty message");
  if (!(request.temperature >= 0.0))
    throw GatewayError(GatewayError::Kind::invalid_request, "temperature must be >= 0");
  if (request.max_tokens <= 0)
    throw GatewayError(GatewayError::Kind::invalid_request, "max_tokens must be positive");
}

void validate(const RetryPolicy& policy) {
  if (policy.max_attempts < 1)
    throw GatewayError(GatewayError::Kind::invalid_request, "max_attempts must be >= 1");
  if (policy.multiplier < 1.0)
    throw GatewayError(GatewayError::Kind::invalid_request, "multiplier must be >= 1");
  if (policy.base_delay.count() < 0)
    throw GatewayError(GatewayError::Kind::invalid_request, "base_delay must be >= 0");
}

std::string canonical_serialization(const ChatRequest& request) {
  std::string out = request.stage_tag;
  out += '\n';
  for (std::size_t i = 0; i < request.messages.size(); ++i) {
    if (i) out += '\n';
    out += to_string(request.messages[i].role);
    out += ':';
    out += request.messages[i].content;
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

std::string fixture_key(const ChatRequest& request) {
  return sha256_hex(canonical_serialization(request));
}

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path) {
  ScriptedBackend backend;
  auto text = detail::read_file(path);
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      backend.add(j.at("key").get<std::string>(), j.at("content").get<std::string>());
    } catch (const json::exception& e) {
      throw CorpusError(CorpusError::Kind::malformed_line, path.string(), e.what(), line_no);
    }
  }
  return backend;
}

void ScriptedBackend::add(std::string key, std::string content) {
  fixtures_[std::move(key)] = std::move(content);
}

void ScriptedBackend::add(const ChatRequest& request, std::string content) {
  add(fixture_key(request), std::move(content));
}

bool ScriptedBackend::contains(std::string_view key) const {
  return fixtures_.count(std::string(key)) != 0;
}

Completion ScriptedBackend::complete(const ChatRequest& request) {
  validate(request);
  auto key = fixture_key(request);
  auto it = fixtures_.find(key);
  if (it == fixtures_.end())
    throw GatewayError(GatewayError::Kind::missing_fixture,
                       "MissingFixture(" + key + ") for stage '" + request.stage_tag + "'");
  return {it->second, {}};
}

Completion CountingBackend::complete(const ChatRequest& request) {
  ++total_;
  {
    std::lock_guard lock(mu_);
    ++per_stage_[request.stage_tag];
  }
  return inner_.complete(request);
}

long CountingBackend::count(std::string_view stage_tag) const {
  std::lock_guard lock(mu_);
  auto it = per_stage_.find(stage_tag);
  return it == per_stage_.end() ? 0 : it->second;
}

Completion RecordingBackend::complete(const ChatRequest& request) {
  auto result = inner_.complete(request);
  auto key = fixture_key(request);
  std::lock_guard lock(mu_);
  if (auto it = index_.find(key); it != index_.end()) {
    records_[it->second].second = result.text;
  } else {
    index_.emplace(key, records_.size());
    records_.emplace_back(std::move(key), result.text);
  }
  return result;
}

std::string RecordingBackend::to_ndjson() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& [key, content] : records_) {
    out += json{{"key", key}, {"content", content}}.dump();
    out += '\n';
  }
  return out;
}

void RecordingBackend::save(const std::filesystem::path& path) const {
  detail::write_file_atomic(path, to_ndjson());
}

std::size_t RecordingBackend::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

ChatRequest make_request(std::string stage_tag, std::string system, std::string user,
                         double temperature, int max_tokens) {
  ChatRequest r;
  r.stage_tag = std::move(stage_tag);
  if (!system.empty()) r.messages.push_back({Role::system, std::move(system)});
  r.messages.push_back({Role::user, std::move(user)});
  r.temperature = temperature;
  r.max_tokens = max_tokens;
  return r;
}

}  // namespace revsim::llm
