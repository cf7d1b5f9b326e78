#include "funnel/error.hpp"

namespace funnel {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::empty_document: return "EmptyDocument";
    case Errc::duplicate_id: return "DuplicateId";
    case Errc::file_not_found: return "FileNotFound";
    case Errc::parse_error: return "ParseError";
    case Errc::empty_plan: return "EmptyPlan";
    case Errc::empty_query: return "EmptyQuery";
    case Errc::unknown_concept: return "UnknownConcept";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::timeout: return "Timeout";
    case Errc::bad_response: return "BadResponse";
    case Errc::embedding_failure: return "EmbeddingFailure";
    case Errc::scorer_failure: return "ScorerFailure";
    case Errc::no_positives: return "NoPositives";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::not_found: return "NotFound";
  }
  return "Unknown";
}

namespace {
std::string format_message(Errc code, const std::string& message, std::optional<std::size_t> line) {
  std::string out{to_string(code)};
  if (line) out += "(line " + std::to_string(*line) + ")";
  if (!message.empty()) out += ": " + message;
  return out;
}
}  // namespace

Error::Error(Errc code, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(format_message(code, message, line)), code_(code), detail_(message), line_(line) {}

}  // namespace funnel
