#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "revsim/llm_gateway.hpp"
#include "revsim/review_engine.hpp"

namespace revsim {

enum class BackendKind { scripted, http };

std::string_view to_string(BackendKind k);

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct RunPaths {
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> fixtures;
  std::optional<std::filesystem::path> output;
  std::optional<std::filesystem::path> prompts;
  std::optional<std::filesystem::path> negative_keywords;
  std::optional<std::filesystem::path> valence;
  std::optional<std::filesystem::path> literature;
  std::optional<std::filesystem::path> parse_fixtures;
};

struct RunConfig {
  BackendKind backend = BackendKind::scripted;
  std::string model = "gpt-4o-mini";
  // Per-role model overrides ("review", "research"); the run model otherwise.
  std::map<std::string, std::string> role_models;
  llm::RetryPolicy retry;
  double dedup_threshold = 0.95;
  int max_rounds = 6;
  std::uint64_t seed = 0;
  std::size_t concurrency = 4;
  double review_temperature = 0.3;
  double research_temperature = 1.0;
  review::RatingMode rating_mode = review::RatingMode::pattern;
  std::vector<std::string> frozen_ids;
  std::optional<std::string> compile_command;
  std::vector<std::string> parse_adapter;
  RunPaths paths;

  const std::string& model_for(std::string_view role) const;
};

using EnvLookup = std::function<std::optional<std::string>(std::string_view)>;
// Reads the process environment.
EnvLookup process_env();

/// Parses TOML; relative paths are resolved against `base_dir`. Throws
/// ConfigError with the offending key on malformed input.
RunConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// REVSIM_BACKEND, REVSIM_MODEL, REVSIM_SEED, REVSIM_MAX_ROUNDS,
/// REVSIM_CONCURRENCY, REVSIM_FIXTURES, REVSIM_CORPUS and REVSIM_OUTPUT
/// replace the matching config values when set.
void apply_env_overrides(RunConfig& config, const EnvLookup& env);

/// Scripted mode needs a readable fixture file; http mode needs
/// REVSIM_API_KEY and REVSIM_API_BASE.
void validate(const RunConfig& config, const EnvLookup& env);

// Snapshot stored in run.json. Credentials are never included.
void to_json(nlohmann::json& j, const RunConfig& config);

}  // namespace revsim
