#include "funnel/engine.hpp"

#include "funnel/error.hpp"
#include "funnel/index_io.hpp"

namespace funnel {

Resources load_resources(const AppConfig& config) {
  Resources r;
  if (!config.corpus.empty()) {
    auto loaded = load_corpus_file(config.corpus);
    r.corpus_errors = std::move(loaded.errors);
    r.corpus = std::make_shared<const Corpus>(std::move(loaded.corpus));
  }
  if (!config.index.empty()) {
    r.index = std::make_shared<const IndexSet>(load_index(config.index));
  } else if (r.corpus) {
    r.index = std::make_shared<const IndexSet>(build_index(*r.corpus));
  } else {
    throw Error(Errc::invalid_argument, "either a corpus or an index is required");
  }
  if (!config.ontology.empty()) {
    auto loaded = load_ontology(config.ontology);
    r.ontology_warnings = std::move(loaded.warnings);
    r.ontology = std::make_shared<const Ontology>(std::move(loaded.ontology));
  } else {
    r.ontology = std::make_shared<const Ontology>();
  }
  r.lexicon = std::make_shared<const VerbLexicon>(config.lexicon.empty() ? VerbLexicon{}
                                                                         : load_verb_lexicon(config.lexicon));
  return r;
}

SearchEngine::SearchEngine(std::shared_ptr<const IndexSet> index, std::shared_ptr<const Ontology> ontology,
                           std::shared_ptr<const VerbLexicon> lexicon, PlanOptions options,
                           std::shared_ptr<const EntityTagger> tagger)
    : index_(std::move(index)),
      ontology_(ontology ? std::move(ontology) : std::make_shared<const Ontology>()),
      lexicon_(lexicon ? std::move(lexicon) : std::make_shared<const VerbLexicon>()),
      options_(options),
      tagger_(std::move(tagger)) {
  if (!index_) throw Error(Errc::invalid_argument, "search engine needs an index");
}

SearchEngine::SearchEngine(const Resources& resources)
    : SearchEngine(resources.index, resources.ontology, resources.lexicon) {}

PlanBuild SearchEngine::preview(const std::string& query, Strategy strategy) const {
  return build_query_plan(query, strategy, *ontology_, *lexicon_, tagger_.get(), options_);
}

SearchOutcome SearchEngine::search(const SearchRequest& request) const {
  SearchOutcome out;
  if (request.override_plan) {
    out.plan = *request.override_plan;
    out.plan.validate();
    out.trace.append(stage::plan,
                     {{"strategy", to_string(request.strategy)}, {"override", true}, {"tree", to_json(out.plan)}});
  } else {
    auto built = preview(request.query, request.strategy);
    out.plan = std::move(built.plan);
    for (auto& e : built.events) out.trace.append(std::move(e));
  }
  auto retrieval = execute_query_plan(out.plan, *index_, request.k);
  out.results = std::move(retrieval.results);
  out.trace.append(std::move(retrieval.event));
  return out;
}

}  // namespace funnel
