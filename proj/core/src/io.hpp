#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace revsim::detail {

// Both throw CorpusError(io_failure).
std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::vector<std::string_view> split_lines(std::string_view text);
std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

}  // namespace revsim::detail
