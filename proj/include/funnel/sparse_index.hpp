#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "funnel/corpus.hpp"
#include "funnel/query_plan.hpp"
#include "funnel/simd/kernels.hpp"
#include "funnel/text.hpp"
#include "funnel/trace.hpp"

namespace funnel {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Non-negative BM25 IDF: ln(1 + (N - df + 0.5) / (df + 0.5)).
double bm25_idf(std::uint64_t doc_count, std::uint64_t df);

/// Postings of one term, structure-of-arrays so term weights can be
/// computed with the vector kernels. `docs` is strictly increasing.
struct PostingList {
  std::vector<std::uint32_t> docs;
  std::vector<double> tfs;
};

/// Inverted index over one (field, analyzer) pair.
class FieldIndex {
 public:
  FieldIndex(std::string name, AnalyzerConfig analyzer, std::size_t doc_slots);

  /// Documents must be added in increasing ordinal order.
  void add(std::uint32_t doc, std::string_view text);
  /// Adds pre-analyzed postings (used by the loader); same ordering rule.
  void add_posting(const std::string& term, std::uint32_t doc, std::uint32_t tf);
  void set_doc_length(std::uint32_t doc, std::uint32_t length);
  /// Computes averages and the BM25 length-normalisation table.
  void finish(const Bm25Params& params);

  const std::string& name() const noexcept { return name_; }
  const AnalyzerConfig& analyzer() const noexcept { return analyzer_; }
  const Bm25Params& params() const noexcept { return params_; }

  /// Documents with at least one token in this field: the N of the IDF.
  std::uint64_t doc_count() const noexcept { return docs_with_field_; }
  std::size_t doc_slots() const noexcept { return doc_length_.size(); }
  std::uint64_t total_tokens() const noexcept { return total_tokens_; }
  double average_length() const noexcept { return average_length_; }
  std::uint32_t doc_length(std::uint32_t doc) const { return doc_length_.at(doc); }

  const PostingList* postings(std::string_view term) const;
  std::uint64_t df(std::string_view term) const;
  std::uint32_t tf(std::string_view term, std::uint32_t doc) const;
  std::vector<std::string> sorted_terms() const;
  std::size_t term_count() const noexcept { return postings_.size(); }

  /// scores[d] += scale * bm25(term, d) for every d in the term's postings.
  void accumulate(std::string_view term, double scale, std::span<double> scores,
                  const simd::KernelTable& kernels = simd::kernels()) const;

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
  };

  std::string name_;
  AnalyzerConfig analyzer_;
  Bm25Params params_;
  std::unordered_map<std::string, PostingList, Hash, std::equal_to<>> postings_;
  std::vector<std::uint32_t> doc_length_;
  std::vector<double> norm_;  // k1 * (1 - b + b * len / avg)
  std::uint64_t docs_with_field_ = 0;
  std::uint64_t total_tokens_ = 0;
  double average_length_ = 0.0;
};

/// sum over query tokens of idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avglen)).
/// Tokens are taken as given; a repeated token counts once per occurrence.
double bm25_score(std::span<const std::string> query_tokens, std::uint32_t doc, const FieldIndex& field,
                  double k1, double b);

enum class SourceText { title, abstract, sections };
std::string_view to_string(SourceText source);
SourceText parse_source_text(std::string_view text);

struct FieldSpec {
  std::string name;
  SourceText source = SourceText::title;
  AnalyzerConfig analyzer;
  double boost = 1.0;
  // Only matching fields decide whether a document matches a variation;
  // the rest contribute score.
  bool matching = true;
};

struct IndexConfig {
  std::vector<FieldSpec> fields;
  Bm25Params bm25;

  /// title/abstract/sections (standard analyzer, boosts 3/2/1) plus a 3-gram
  /// subfield for each at boost 0.3.
  static IndexConfig defaults();
};

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based

  friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};
using RankedList = std::vector<ScoredDoc>;

/// All field indexes for one corpus. Immutable after build.
class IndexSet {
 public:
  IndexSet(IndexConfig config, std::vector<std::string> doc_ids, std::vector<std::string> titles,
           std::vector<std::vector<std::uint32_t>> chunk_lengths, std::vector<FieldIndex> fields);

  const IndexConfig& config() const noexcept { return config_; }
  std::size_t doc_count() const noexcept { return doc_ids_.size(); }
  const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
  const std::string& doc_id(std::uint32_t ordinal) const { return doc_ids_.at(ordinal); }
  const std::string& title(std::uint32_t ordinal) const { return titles_.at(ordinal); }
  std::optional<std::uint32_t> ordinal(std::string_view doc_id) const;
  /// Token counts of the document's chunks under the default chunk policy.
  const std::vector<std::uint32_t>& chunk_lengths(std::uint32_t ordinal) const { return chunk_lengths_.at(ordinal); }

  const std::vector<FieldIndex>& fields() const noexcept { return fields_; }
  const FieldIndex* field(std::string_view name) const;

 private:
  IndexConfig config_;
  std::vector<std::string> doc_ids_;
  std::vector<std::string> titles_;
  std::vector<std::vector<std::uint32_t>> chunk_lengths_;
  std::vector<FieldIndex> fields_;
  std::unordered_map<std::string, std::uint32_t> ordinals_;
};

IndexSet build_index(const Corpus& corpus, const IndexConfig& config = IndexConfig::defaults(),
                     const ChunkPolicy& chunking = {});

struct Retrieval {
  RankedList results;
  TraceEvent event;  // stage "retrieve"
};

/// Best-variation, most_fields, boolean MUST/SHOULD execution:
///   score(d) = sum_g boost_g * max_v weight_v * sum_f boost_f * bm25(v, d, f)
/// over candidates matching every MUST group (or any SHOULD group when there
/// is no MUST group). Top-k by score, ties by ascending doc_id.
Retrieval execute_query_plan(const QueryPlan& plan, const IndexSet& index, std::size_t k);

/// Sorts by score descending then doc_id ascending, truncates to k, assigns ranks.
void finalize_ranking(RankedList& list, std::size_t k);

nlohmann::json to_json(const RankedList& list);

}  // namespace funnel
