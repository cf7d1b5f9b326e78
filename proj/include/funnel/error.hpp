#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace funnel {

enum class Errc {
  empty_document,
  duplicate_id,
  file_not_found,
  parse_error,
  empty_plan,
  empty_query,
  unknown_concept,
  dimension_mismatch,
  timeout,
  bad_response,
  embedding_failure,
  scorer_failure,
  no_positives,
  invalid_argument,
  not_found,
};

std::string_view to_string(Errc code);

/// Every recoverable failure in the library is reported with one of these.
/// `line()` is set for parse errors that can be pinned to an input line.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::optional<std::size_t> line = std::nullopt);

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }
  /// The message without the code/line prefix carried by what().
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
  std::optional<std::size_t> line_;
};

}  // namespace funnel
