#pragma once

#include <filesystem>
#include <iosfwd>

#include "funnel/sparse_index.hpp"

namespace funnel {

// Line-delimited JSON: a header line carrying the format tag, version and
// analyzer configs, one line per document, then per field a lengths line and
// one line per term. Readers accept any 1.x file.
inline constexpr const char* kIndexFormat = "funnel-index";
inline constexpr const char* kIndexVersion = "1.0";

void write_index(const IndexSet& index, std::ostream& out);
void save_index(const IndexSet& index, const std::filesystem::path& path);

/// Throws ParseError (with line) on malformed or incompatible input.
IndexSet read_index(std::istream& in);
IndexSet load_index(const std::filesystem::path& path);

nlohmann::json to_json(const AnalyzerConfig& config);
AnalyzerConfig analyzer_from_json(const nlohmann::json& j);

}  // namespace funnel
