#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>

#include "funnel/config.hpp"
#include "funnel/corpus.hpp"
#include "funnel/expansion.hpp"
#include "funnel/sparse_index.hpp"
#include "funnel/trace.hpp"

namespace funnel {

/// Loaded, immutable state shared by the CLI and the service.
struct Resources {
  std::shared_ptr<const Corpus> corpus;  // may be null when only an index file was given
  std::shared_ptr<const IndexSet> index;
  std::shared_ptr<const Ontology> ontology;
  std::shared_ptr<const VerbLexicon> lexicon;
  std::vector<Error> corpus_errors;
  std::vector<DanglingReference> ontology_warnings;
};

/// Index comes from `config.index` when set, otherwise it is built from the
/// corpus. Missing ontology/lexicon paths yield empty ones.
Resources load_resources(const AppConfig& config);

struct SearchRequest {
  std::string query;
  Strategy strategy = Strategy::should_expansion;
  std::size_t k = 10;
  std::optional<QueryPlan> override_plan;  // executed verbatim, skipping expansion
};

struct SearchOutcome {
  QueryPlan plan;
  RankedList results;
  Trace trace;  // entities, expansion, plan, retrieve (plan, retrieve for overrides)
};

/// Query expansion then fielded BM25 execution.
class SearchEngine {
 public:
  SearchEngine(std::shared_ptr<const IndexSet> index, std::shared_ptr<const Ontology> ontology,
               std::shared_ptr<const VerbLexicon> lexicon, PlanOptions options = {},
               std::shared_ptr<const EntityTagger> tagger = nullptr);
  explicit SearchEngine(const Resources& resources);

  SearchOutcome search(const SearchRequest& request) const;
  PlanBuild preview(const std::string& query, Strategy strategy) const;

  const IndexSet& index() const noexcept { return *index_; }
  const Ontology& ontology() const noexcept { return *ontology_; }
  const PlanOptions& options() const noexcept { return options_; }

 private:
  std::shared_ptr<const IndexSet> index_;
  std::shared_ptr<const Ontology> ontology_;
  std::shared_ptr<const VerbLexicon> lexicon_;
  PlanOptions options_;
  std::shared_ptr<const EntityTagger> tagger_;
};

}  // namespace funnel
