#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "funnel/corpus.hpp"
#include "funnel/expansion.hpp"
#include "funnel/sparse_index.hpp"

namespace funnel {

inline constexpr std::size_t kNdcgCutoff = 10;
inline constexpr std::size_t kRetrievalDepth = 1000;

struct QueryRecord {
  std::string query_id;
  std::string text;
};
using QuerySet = std::vector<QueryRecord>;

/// Binary relevance: (query_id -> doc_id -> grade).
using Qrels = std::map<std::string, std::map<std::string, int>>;

/// DCG = sum_{i<=k} rel_i / log2(i + 1), normalised by the ideal ordering.
/// Throws NoPositives when `relevant` has no positive grade.
double ndcg_at_k(std::span<const std::string> ranked_doc_ids, const std::map<std::string, int>& relevant,
                 std::size_t k = kNdcgCutoff);

struct QueryDiagnostics {
  std::string query_id;
  std::size_t returned = 0;
  std::optional<double> ndcg;          // unset when the query failed
  std::optional<std::size_t> first_relevant_rank;
  std::string error;                   // empty on success
  std::vector<std::string> top_doc_ids;  // first kNdcgCutoff results
};

struct RunResult {
  Strategy strategy = Strategy::most_fields;
  double ndcg_at_10 = 0.0;       // mean over evaluated queries
  double empty_result_rate = 0.0;  // share of evaluated queries with no results
  std::size_t query_count = 0;
  std::size_t evaluated = 0;
  std::vector<QueryDiagnostics> queries;
  std::vector<std::vector<std::string>> rankings;  // per query, up to `depth` doc ids
};

struct EvalConfig {
  std::size_t depth = kRetrievalDepth;
  std::size_t cutoff = kNdcgCutoff;
  std::size_t threads = 0;  // 0: hardware concurrency
  PlanOptions plan;
};

/// Plans and executes every query with `strategy`. Per-query failures are
/// recorded in the diagnostics; they never abort the run.
RunResult evaluate_run(const IndexSet& index, const QuerySet& queries, const Qrels& qrels, Strategy strategy,
                       const Ontology& ontology, const VerbLexicon& lexicon, const EvalConfig& config = {});

/// Line-delimited per-query records then one summary record.
std::string run_report(const RunResult& run);
nlohmann::json summary_record(const RunResult& run);

struct MldrWarning {
  std::string query_id;
  std::string doc_id;
  std::size_t line = 0;
};

struct MldrSubset {
  QuerySet queries;
  Corpus corpus;
  Qrels qrels;
  std::vector<MldrWarning> missing_docs;
};

/// queries: `query_id<TAB>text`; qrels: `query_id<TAB>doc_id<TAB>grade`;
/// corpus: the corpus line format. Throws ParseError(line) on bad lines.
MldrSubset load_mldr_subset(const std::filesystem::path& queries, const std::filesystem::path& corpus,
                            const std::filesystem::path& qrels);
QuerySet load_queries(const std::filesystem::path& path);
Qrels load_qrels(const std::filesystem::path& path);

struct StorageParams {
  std::uint64_t doc_count = 0;
  std::uint64_t chunks_per_doc = 0;
  std::uint64_t embedding_dim = 0;
  std::uint64_t bytes_per_dim = 0;
  std::uint64_t avg_token_bytes_per_doc = 0;
};

struct StorageEstimate {
  std::uint64_t dense_bytes = 0;
  std::uint64_t sparse_bytes = 0;
};

/// dense = docs * chunks * dim * bytes_per_dim + docs * token_bytes;
/// sparse = docs * token_bytes. Exact integer arithmetic; throws on overflow.
StorageEstimate estimate_storage(const StorageParams& params);

}  // namespace funnel
