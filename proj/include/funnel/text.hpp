#pragma once

#include <cstddef>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace funnel {

/// A token and the byte range of the source word it came from.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

enum class AnalyzerKind { standard, ngram };

struct AnalyzerConfig {
  AnalyzerKind kind = AnalyzerKind::standard;
  std::size_t ngram_size = 3;
  // Lowercasing is unconditional; stopwords are optional.
  std::shared_ptr<const std::set<std::string, std::less<>>> stopwords;

  static AnalyzerConfig standard_plain();
  static AnalyzerConfig standard_english();
  static AnalyzerConfig ngram_english(std::size_t size = 3);

  void validate() const;
  std::string describe() const;
};

bool operator==(const AnalyzerConfig& a, const AnalyzerConfig& b);

std::shared_ptr<const std::set<std::string, std::less<>>> english_stopwords();

/// Splits into words (runs of ASCII alphanumerics or non-ASCII code points),
/// lowercased, with byte spans into `text`. No stopword filtering.
std::vector<Token> segment_words(std::string_view text);

/// Full analysis chain for `config`. Spans of n-grams point at their word.
std::vector<Token> analyze_tokens(std::string_view text, const AnalyzerConfig& config);
std::vector<std::string> analyze(std::string_view text, const AnalyzerConfig& config);

/// Token count under the plain standard analyzer (the corpus-wide count).
std::size_t count_tokens(std::string_view text);

std::string to_lower_ascii(std::string_view text);
std::string_view trim(std::string_view text);

/// Longest prefix holding at most `max_code_points` UTF-8 code points.
std::string_view utf8_prefix(std::string_view text, std::size_t max_code_points);

}  // namespace funnel
