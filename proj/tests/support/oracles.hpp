#pragma once

// Brute-force reference implementations used as test oracles. They recompute
// everything from raw token lists with plain loops and share no code with the
// indexed paths beyond the analyzers.

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "funnel/corpus.hpp"
#include "funnel/query_plan.hpp"
#include "funnel/sparse_index.hpp"

namespace oracle {

inline std::filesystem::path data_dir() { return FUNNEL_DATA_DIR; }
inline std::filesystem::path fixture(const std::string& name) { return data_dir() / "fixtures" / name; }
inline std::filesystem::path bench(const std::string& name) { return data_dir() / "bench" / name; }

/// BM25 of `query` (one term per occurrence) for document `d` of `docs`,
/// with N = number of non-empty documents.
double bm25(const std::vector<std::string>& query, const std::vector<std::vector<std::string>>& docs, std::size_t d,
            double k1 = 1.2, double b = 0.75);

struct Hit {
  std::string doc_id;
  double score = 0.0;
};

/// Boolean MUST/SHOULD execution straight from the corpus text.
std::vector<Hit> execute_plan(const funnel::Corpus& corpus, const funnel::IndexConfig& config,
                              const funnel::QueryPlan& plan, std::size_t k);

/// nDCG@10 for a single positive found at 1-based `rank` (0: not retrieved).
double single_positive_ndcg(std::size_t rank, std::size_t cutoff = 10);

/// Reciprocal rank fusion by enumeration: (item, score) sorted by score
/// descending then item ascending. `lists` hold item ids best first.
std::vector<std::pair<std::size_t, double>> rrf(const std::vector<std::vector<std::size_t>>& lists, double k);

/// Multihop dense selection with plain loops over float rows.
std::vector<std::vector<std::size_t>> multihop(const std::vector<std::vector<float>>& rows,
                                               const std::vector<float>& question, std::size_t hops,
                                               std::size_t per_hop, double alpha);

/// Cosine in double over float inputs; 0 when either side is zero.
double cosine(const std::vector<float>& a, const std::vector<float>& b);

}  // namespace oracle
