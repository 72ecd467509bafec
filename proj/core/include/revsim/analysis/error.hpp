#pragma once

#include <string>

#include "revsim/error.hpp"

namespace revsim::analysis {

class AnalysisError : public Error {
 public:
  enum class Kind {
    too_short,
    non_alphabetic,
    empty_document,
    no_tokens,
    invalid_parse,
    length_mismatch,
    degenerate_variance,
    too_few_points,
    empty,
    malformed_input,
  };

  AnalysisError(Kind kind, std::string message) : Error(std::move(message)), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace revsim::analysis
