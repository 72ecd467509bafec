#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace revsim::research {

struct SearchRecord {
  std::string title;
  std::optional<int> year;
  std::optional<std::string> abstract;
  std::optional<std::string> url;

  bool operator==(const SearchRecord&) const = default;
};

void to_json(nlohmann::json& j, const SearchRecord& r);
void from_json(const nlohmann::json& j, SearchRecord& r);

/// Literature lookup contract. Results come back pre-ranked, best first.
class SearchProvider {
 public:
  virtual ~SearchProvider() = default;
  virtual std::vector<SearchRecord> search(std::string_view query, std::size_t limit) const = 0;
};

/// Offline provider over an in-memory index. Records are scored by how many
/// query terms appear in their title and abstract; ties keep index order.
class FixtureSearchProvider final : public SearchProvider {
 public:
  explicit FixtureSearchProvider(std::vector<SearchRecord> index);
  // NDJSON, one SearchRecord per line.
  static FixtureSearchProvider from_file(const std::filesystem::path& path);

  std::vector<SearchRecord> search(std::string_view query, std::size_t limit) const override;
  std::span<const SearchRecord> records() const { return index_; }

 private:
  std::vector<SearchRecord> index_;
};

// Lowercase alphanumeric terms of `text` minus a small stop-word list.
std::vector<std::string> query_terms(std::string_view text);

}  // namespace revsim::research
