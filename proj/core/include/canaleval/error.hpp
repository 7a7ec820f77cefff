#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace canaleval {

enum class ErrorKind {
  invalid_annotation,
  invalid_parameter,
  invalid_input,
  geometry_mismatch,
  undefined_metric,
  extraction_failure,
  degenerate_test,
  parse_error,
  spec_error,
  io_error,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so
/// callers (and the CLI's machine-readable error record) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace canaleval
