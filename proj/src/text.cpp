#include "funnel/text.hpp"

#include "funnel/error.hpp"

namespace funnel {

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

// Byte offsets of every code point start in `word`, plus word.size().
std::vector<std::size_t> code_point_starts(std::string_view word) {
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (!is_continuation(static_cast<unsigned char>(word[i]))) starts.push_back(i);
  }
  starts.push_back(word.size());
  return starts;
}

}  // namespace

AnalyzerConfig AnalyzerConfig::standard_plain() { return AnalyzerConfig{}; }

AnalyzerConfig AnalyzerConfig::standard_english() {
  AnalyzerConfig c;
  c.stopwords = english_stopwords();
  return c;
}

AnalyzerConfig AnalyzerConfig::ngram_english(std::size_t size) {
  AnalyzerConfig c;
  c.kind = AnalyzerKind::ngram;
  c.ngram_size = size;
  c.stopwords = english_stopwords();
  return c;
}

void AnalyzerConfig::validate() const {
  if (kind == AnalyzerKind::ngram && ngram_size < 2) {
    throw Error(Errc::invalid_argument, "ngram_size must be >= 2");
  }
}

std::string AnalyzerConfig::describe() const {
  std::string s = kind == AnalyzerKind::standard ? "standard" : "ngram" + std::to_string(ngram_size);
  if (stopwords) s += "+stop";
  return s;
}

bool operator==(const AnalyzerConfig& a, const AnalyzerConfig& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == AnalyzerKind::ngram && a.ngram_size != b.ngram_size) return false;
  if (static_cast<bool>(a.stopwords) != static_cast<bool>(b.stopwords)) return false;
  return !a.stopwords || *a.stopwords == *b.stopwords;
}

std::shared_ptr<const std::set<std::string, std::less<>>> english_stopwords() {
  static const auto words = std::make_shared<const std::set<std::string, std::less<>>>(
      std::set<std::string, std::less<>>{
          "a",    "an",    "and",   "are",  "as",    "at",   "be",    "but",  "by",    "can",
          "could", "did",  "do",    "does", "for",   "from", "had",   "has",  "have",  "how",
          "if",   "in",    "into",  "is",   "it",    "its",  "no",    "not",  "of",    "on",
          "or",   "such",  "that",  "the",  "their", "then", "there", "these", "they", "this",
          "to",   "was",   "were",  "what", "when",  "where", "which", "who", "why",   "will",
          "with", "would"});
  return words;
}

std::vector<Token> segment_words(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_byte(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
    Token t;
    t.begin = i;
    t.end = j;
    t.text.reserve(j - i);
    for (std::size_t k = i; k < j; ++k) t.text.push_back(lower(text[k]));
    out.push_back(std::move(t));
    i = j;
  }
  return out;
}

std::vector<Token> analyze_tokens(std::string_view text, const AnalyzerConfig& config) {
  std::vector<Token> words = segment_words(text);
  if (config.stopwords) {
    std::erase_if(words, [&](const Token& t) { return config.stopwords->contains(t.text); });
  }
  if (config.kind == AnalyzerKind::standard) return words;

  std::vector<Token> grams;
  for (const Token& w : words) {
    const auto starts = code_point_starts(w.text);
    const std::size_t length = starts.size() - 1;
    if (length <= config.ngram_size) {
      grams.push_back(w);
      continue;
    }
    for (std::size_t k = 0; k + config.ngram_size <= length; ++k) {
      Token g;
      g.text = w.text.substr(starts[k], starts[k + config.ngram_size] - starts[k]);
      g.begin = w.begin;
      g.end = w.end;
      grams.push_back(std::move(g));
    }
  }
  return grams;
}

std::vector<std::string> analyze(std::string_view text, const AnalyzerConfig& config) {
  std::vector<std::string> out;
  for (auto& t : analyze_tokens(text, config)) out.push_back(std::move(t.text));
  return out;
}

std::size_t count_tokens(std::string_view text) { return segment_words(text).size(); }

std::string to_lower_ascii(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = lower(c);
  return out;
}

std::string_view trim(std::string_view text) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (!text.empty() && ws(text.front())) text.remove_prefix(1);
  while (!text.empty() && ws(text.back())) text.remove_suffix(1);
  return text;
}

std::string_view utf8_prefix(std::string_view text, std::size_t max_code_points) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (is_continuation(static_cast<unsigned char>(text[i]))) continue;
    if (seen == max_code_points) return text.substr(0, i);
    ++seen;
  }
  return text;
}

}  // namespace funnel
