#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bml {

enum class ErrorCode {
  invalid_dimension,
  invalid_graph,
  empty_coding,
  invalid_coding,
  empty_sample,
  insufficient_pairs,
  rank_deficiency,
  degenerate_fit,
  invalid_parameter,
  unsupported_dimension,
  conditioning,
  harness_failure,
  bootstrap_failure,
  parse_error,
  join_error,
  usage_error,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_dimension: return "invalid-dimension";
    case ErrorCode::invalid_graph: return "invalid-graph";
    case ErrorCode::empty_coding: return "empty-coding";
    case ErrorCode::invalid_coding: return "invalid-coding";
    case ErrorCode::empty_sample: return "empty-sample";
    case ErrorCode::insufficient_pairs: return "insufficient-pairs";
    case ErrorCode::rank_deficiency: return "rank-deficiency";
    case ErrorCode::degenerate_fit: return "degenerate-fit";
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::unsupported_dimension: return "unsupported-dimension";
    case ErrorCode::conditioning: return "conditioning";
    case ErrorCode::harness_failure: return "harness-failure";
    case ErrorCode::bootstrap_failure: return "bootstrap-failure";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::join_error: return "join-error";
    case ErrorCode::usage_error: return "usage-error";
  }
  return "unknown";
}

/// Library-wide exception. The code lets callers (and the CLI) dispatch
/// on the failure kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bml
