#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "revsim/llm_gateway.hpp"

namespace revsim::llm {

using nlohmann::json;

namespace {

// Splits "https://host:port/v1" into ("https://host:port", "/v1").
std::pair<std::string, std::string> split_base_url(const std::string& url) {
  auto scheme = url.find("://");
  auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
  auto slash = url.find('/', host_start);
  if (slash == std::string::npos) return {url, ""};
  std::string path = url.substr(slash);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, slash), path};
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpBackend::HttpBackend(HttpOptions options) : options_(std::move(options)) {
  validate(options_.retry);
  if (options_.base_url.empty())
    throw GatewayError(GatewayError::Kind::invalid_request, "HTTP backend needs a base URL");
  std::tie(host_, path_prefix_) = split_base_url(options_.base_url);
  if (!options_.sleep) options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

HttpBackend::~HttpBackend() = default;

HttpOptions HttpBackend::options_from_env(std::string model, RetryPolicy retry) {
  const char* base = std::getenv("REVSIM_API_BASE");
  const char* key = std::getenv("REVSIM_API_KEY");
  if (!base || !*base)
    throw GatewayError(GatewayError::Kind::invalid_request, "REVSIM_API_BASE is not set");
  if (!key || !*key)
    throw GatewayError(GatewayError::Kind::invalid_request, "REVSIM_API_KEY is not set");
  HttpOptions o;
  o.base_url = base;
  o.api_key = key;
  o.model = std::move(model);
  o.retry = retry;
  return o;
}

Completion HttpBackend::complete(const ChatRequest& request) {
  validate(request);
  json body{{"model", options_.model},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens}};
  body["messages"] = json::array();
  for (const auto& m : request.messages)
    body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
  const std::string payload = body.dump();
  const std::string path = path_prefix_ + "/chat/completions";

  httplib::Client client(host_);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  client.set_write_timeout(options_.timeout);
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

  std::string last_error;
  for (int attempt = 1; attempt <= options_.retry.max_attempts; ++attempt) {
    if (attempt > 1) options_.sleep(delay_for(options_.retry, attempt - 1));
    ++attempts_;
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) {
      try {
        auto j = json::parse(res->body);
        Completion c;
        c.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
          c.usage.prompt_tokens = u->value("prompt_tokens", 0L);
          c.usage.completion_tokens = u->value("completion_tokens", 0L);
        }
        return c;
      } catch (const json::exception& e) {
        throw GatewayError(GatewayError::Kind::transport,
                           std::string("Transport(malformed response body: ") + e.what() + ")");
      }
    }
    if (!retryable_status(res->status))
      throw GatewayError(GatewayError::Kind::bad_status,
                         "BadStatus(" + std::to_string(res->status) + ")", res->status, attempt);
    last_error = "status " + std::to_string(res->status);
  }
  throw GatewayError(GatewayError::Kind::exhausted,
                     "Exhausted(" + std::to_string(options_.retry.max_attempts) + "): " + last_error, 0,
                     options_.retry.max_attempts);
}

}  // namespace revsim::llm
