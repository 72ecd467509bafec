#include "revsim/config.hpp"

#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "io.hpp"

namespace revsim {

namespace {

const std::vector<std::string_view> kTopLevel = {"backend", "model", "seed", "max_rounds", "concurrency",
                                                 "dedup_threshold", "frozen", "compile_command", "parse_adapter",
                                                 "paths", "retry", "review", "research"};

[[noreturn]] void bad(std::string_view key, std::string_view why) {
  throw ConfigError("config key '" + std::string(key) + "': " + std::string(why));
}

template <typename T>
std::optional<T> get(const toml::table& t, std::string_view key, std::string_view full) {
  const toml::node* n = t.get(key);
  if (!n) return std::nullopt;
  if constexpr (std::is_same_v<T, double>) {
    // Integers are accepted where a float is expected.
    if (auto v = n->value<double>()) return *v;
    bad(full, "expected a number");
  } else if constexpr (std::is_same_v<T, std::int64_t>) {
    if (!n->is_integer()) bad(full, "expected an integer");
    return n->value<std::int64_t>();
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!n->is_boolean()) bad(full, "expected true or false");
    return n->value<bool>();
  } else {
    if (!n->is_string()) bad(full, "expected a string");
    return n->value<std::string>();
  }
}

std::vector<std::string> string_list(const toml::table& t, std::string_view key) {
  std::vector<std::string> out;
  const toml::node* n = t.get(key);
  if (!n) return out;
  const auto* arr = n->as_array();
  if (!arr) bad(key, "expected an array of strings");
  for (const auto& item : *arr) {
    if (!item.is_string()) bad(key, "expected an array of strings");
    out.push_back(*item.value<std::string>());
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::int64_t parse_int(std::string_view name, const std::string& s) {
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || errno != 0) throw ConfigError(std::string(name) + " must be an integer, got '" + s + "'");
  return v;
}

const toml::table* subtable(const toml::table& root, std::string_view key) {
  const toml::node* n = root.get(key);
  if (!n) return nullptr;
  if (!n->is_table()) bad(key, "expected a table");
  return n->as_table();
}

}  // namespace

std::string_view to_string(BackendKind k) { return k == BackendKind::http ? "http" : "scripted"; }

const std::string& RunConfig::model_for(std::string_view role) const {
  for (const auto& [r, m] : role_models)
    if (r == role) return m;
  return model;
}

EnvLookup process_env() {
  return [](std::string_view name) -> std::optional<std::string> {
    const char* v = std::getenv(std::string(name).c_str());
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
}

RunConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    throw ConfigError("malformed TOML at line " + std::to_string(e.source().begin.line) + ": " +
                      std::string(e.description()));
  }
  for (const auto& [k, v] : root)
    if (std::find(kTopLevel.begin(), kTopLevel.end(), k.str()) == kTopLevel.end()) bad(k.str(), "unknown key");

  RunConfig c;
  if (auto b = get<std::string>(root, "backend", "backend")) {
    if (*b == "scripted") c.backend = BackendKind::scripted;
    else if (*b == "http") c.backend = BackendKind::http;
    else bad("backend", "must be \"scripted\" or \"http\"");
  }
  if (auto m = get<std::string>(root, "model", "model")) c.model = *m;
  if (auto s = get<std::int64_t>(root, "seed", "seed")) {
    if (*s < 0) bad("seed", "must be non-negative");
    c.seed = static_cast<std::uint64_t>(*s);
  }
  if (auto r = get<std::int64_t>(root, "max_rounds", "max_rounds")) c.max_rounds = static_cast<int>(*r);
  if (auto n = get<std::int64_t>(root, "concurrency", "concurrency")) {
    if (*n < 1) bad("concurrency", "must be at least 1");
    c.concurrency = static_cast<std::size_t>(*n);
  }
  if (auto t = get<double>(root, "dedup_threshold", "dedup_threshold")) c.dedup_threshold = *t;
  c.frozen_ids = string_list(root, "frozen");
  c.compile_command = get<std::string>(root, "compile_command", "compile_command");
  c.parse_adapter = string_list(root, "parse_adapter");

  if (const auto* p = subtable(root, "paths")) {
    auto path = [&](const char* key, std::optional<std::filesystem::path>& dst) {
      if (auto v = get<std::string>(*p, key, std::string("paths.") + key)) dst = resolve(base_dir, *v);
    };
    path("corpus", c.paths.corpus);
    path("fixtures", c.paths.fixtures);
    path("output", c.paths.output);
    path("prompts", c.paths.prompts);
    path("negative_keywords", c.paths.negative_keywords);
    path("valence", c.paths.valence);
    path("literature", c.paths.literature);
    path("parse_fixtures", c.paths.parse_fixtures);
  }
  if (const auto* r = subtable(root, "retry")) {
    if (auto v = get<std::int64_t>(*r, "max_attempts", "retry.max_attempts")) c.retry.max_attempts = static_cast<int>(*v);
    if (auto v = get<std::int64_t>(*r, "base_delay_ms", "retry.base_delay_ms")) c.retry.base_delay = std::chrono::milliseconds(*v);
    if (auto v = get<double>(*r, "multiplier", "retry.multiplier")) c.retry.multiplier = *v;
  }
  if (const auto* r = subtable(root, "review")) {
    if (auto v = get<double>(*r, "temperature", "review.temperature")) c.review_temperature = *v;
    if (auto v = get<std::string>(*r, "model", "review.model")) c.role_models["review"] = *v;
    if (auto v = get<std::string>(*r, "rating_mode", "review.rating_mode")) {
      if (*v == "pattern") c.rating_mode = review::RatingMode::pattern;
      else if (*v == "json") c.rating_mode = review::RatingMode::json;
      else bad("review.rating_mode", "must be \"pattern\" or \"json\"");
    }
  }
  if (const auto* r = subtable(root, "research")) {
    if (auto v = get<double>(*r, "temperature", "research.temperature")) c.research_temperature = *v;
    if (auto v = get<std::string>(*r, "model", "research.model")) c.role_models["research"] = *v;
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = detail::read_file(path);
  } catch (const Error& e) {
    throw ConfigError("cannot read config " + path.string());
  }
  return parse_config(text, path.parent_path());
}

void apply_env_overrides(RunConfig& c, const EnvLookup& env) {
  if (auto v = env("REVSIM_BACKEND")) {
    if (*v == "scripted") c.backend = BackendKind::scripted;
    else if (*v == "http") c.backend = BackendKind::http;
    else throw ConfigError("REVSIM_BACKEND must be scripted or http, got '" + *v + "'");
  }
  if (auto v = env("REVSIM_MODEL")) c.model = *v;
  if (auto v = env("REVSIM_SEED")) {
    auto s = parse_int("REVSIM_SEED", *v);
    if (s < 0) throw ConfigError("REVSIM_SEED must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (auto v = env("REVSIM_MAX_ROUNDS")) c.max_rounds = static_cast<int>(parse_int("REVSIM_MAX_ROUNDS", *v));
  if (auto v = env("REVSIM_CONCURRENCY")) {
    auto n = parse_int("REVSIM_CONCURRENCY", *v);
    if (n < 1) throw ConfigError("REVSIM_CONCURRENCY must be at least 1");
    c.concurrency = static_cast<std::size_t>(n);
  }
  if (auto v = env("REVSIM_FIXTURES")) c.paths.fixtures = *v;
  if (auto v = env("REVSIM_CORPUS")) c.paths.corpus = *v;
  if (auto v = env("REVSIM_OUTPUT")) c.paths.output = *v;
}

void validate(const RunConfig& c, const EnvLookup& env) {
  if (c.max_rounds < 1) throw ConfigError("max_rounds must be at least 1");
  if (c.concurrency < 1) throw ConfigError("concurrency must be at least 1");
  if (!(c.dedup_threshold >= -1.0 && c.dedup_threshold <= 1.0)) throw ConfigError("dedup_threshold must lie in [-1, 1]");
  if (!(c.review_temperature >= 0.0) || !(c.research_temperature >= 0.0))
    throw ConfigError("temperatures must be non-negative");
  try {
    llm::validate(c.retry);
  } catch (const llm::GatewayError& e) {
    throw ConfigError(std::string("retry policy: ") + e.what());
  }
  if (c.backend == BackendKind::scripted) {
    if (!c.paths.fixtures) throw ConfigError("scripted backend needs paths.fixtures");
    std::ifstream probe(*c.paths.fixtures);
    if (!probe) throw ConfigError("fixture file not readable: " + c.paths.fixtures->string());
  } else {
    if (!env("REVSIM_API_KEY")) throw ConfigError("http backend needs REVSIM_API_KEY in the environment");
    if (!env("REVSIM_API_BASE")) throw ConfigError("http backend needs REVSIM_API_BASE in the environment");
    if (c.model.empty()) throw ConfigError("http backend needs a model identifier");
  }
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  auto opt = [](const std::optional<std::filesystem::path>& p) {
    return p ? nlohmann::json(p->string()) : nlohmann::json(nullptr);
  };
  j = nlohmann::json{
      {"backend", to_string(c.backend)},
      {"model", c.model},
      {"role_models", c.role_models},
      {"retry",
       {{"max_attempts", c.retry.max_attempts},
        {"base_delay_ms", c.retry.base_delay.count()},
        {"multiplier", c.retry.multiplier}}},
      {"dedup_threshold", c.dedup_threshold},
      {"max_rounds", c.max_rounds},
      {"seed", c.seed},
      {"concurrency", c.concurrency},
      {"review_temperature", c.review_temperature},
      {"research_temperature", c.research_temperature},
      {"rating_mode", c.rating_mode == review::RatingMode::json ? "json" : "pattern"},
      {"frozen", c.frozen_ids},
      {"paths",
       {{"corpus", opt(c.paths.corpus)},
        {"fixtures", opt(c.paths.fixtures)},
        {"output", opt(c.paths.output)},
        {"prompts", opt(c.paths.prompts)},
        {"negative_keywords", opt(c.paths.negative_keywords)},
        {"valence", opt(c.paths.valence)},
        {"literature", opt(c.paths.literature)},
        {"parse_fixtures", opt(c.paths.parse_fixtures)}}},
  };
  j["compile_command"] = c.compile_command ? nlohmann::json(*c.compile_command) : nlohmann::json(nullptr);
}

}  // namespace revsim
