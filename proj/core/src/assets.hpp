#pragma once

#include <optional>
#include <string_view>

namespace revsim::detail {

// Contents of a file shipped under core/data/, looked up by file name.
std::optional<std::string_view> builtin_asset(std::string_view name);

}  // namespace revsim::detail
