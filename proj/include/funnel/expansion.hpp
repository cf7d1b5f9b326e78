#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "funnel/ontology.hpp"
#include "funnel/query_plan.hpp"
#include "funnel/trace.hpp"

namespace funnel {

struct EntityMention {
  std::string surface;
  std::size_t begin = 0;  // byte span in the query
  std::size_t end = 0;
  std::string concept_id;

  friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

/// Entity recognition slot. The default is a gazetteer over the ontology;
/// an external tagger can be plugged in by implementing this.
class EntityTagger {
 public:
  virtual ~EntityTagger() = default;
  virtual std::vector<EntityMention> tag(std::string_view query) const = 0;
};

/// Case-insensitive, word-aligned dictionary matching over labels and
/// synonyms. Overlaps resolve by longest span, then leftmost; a span that
/// names several concepts prefers a label match, then the smallest id.
std::vector<EntityMention> extract_entities(std::string_view query, const Ontology& ontology);

class GazetteerTagger final : public EntityTagger {
 public:
  explicit GazetteerTagger(std::shared_ptr<const Ontology> ontology) : ontology_(std::move(ontology)) {}
  std::vector<EntityMention> tag(std::string_view query) const override {
    return extract_entities(query, *ontology_);
  }

 private:
  std::shared_ptr<const Ontology> ontology_;
};

struct TieredText {
  std::string text;
  Tier tier = Tier::exact;

  friend bool operator==(const TieredText&, const TieredText&) = default;
};

struct ExpansionSet {
  std::string concept_id;
  std::vector<TieredText> variations;
};

/// Label, synonyms, then 1-hop hyponym and hypernym labels; case-insensitive
/// duplicates keep their first (most precise) tier. Throws UnknownConcept.
ExpansionSet expand_entity(std::string_view concept_id, const Ontology& ontology);

struct TierWeights {
  double exact = 1.0;
  double synonym = 0.8;
  double hyponym = 0.6;
  double hypernym = 0.4;

  double operator()(Tier tier) const;
};

/// Query words outside entity spans that the lexicon knows, one group each
/// (first occurrence order), boost 1.0.
std::vector<VariationGroup> expand_verbs(std::string_view query, const std::vector<EntityMention>& mentions,
                                         const VerbLexicon& lexicon, const TierWeights& weights = {});

enum class Strategy { most_fields, must_expansion, should_expansion };
std::string_view to_string(Strategy strategy);
Strategy parse_strategy(std::string_view text);

struct PlanOptions {
  TierWeights weights;
  double entity_boost = 2.0;
  double verb_boost = 1.0;
  double residual_boost = 0.5;
};

struct PlanBuild {
  QueryPlan plan;
  std::vector<EntityMention> mentions;
  std::vector<ExpansionSet> expansions;
  std::vector<TraceEvent> events;  // entities, expansion, plan
};

/// Throws EmptyQuery when the query has no words.
PlanBuild build_query_plan(std::string_view query, Strategy strategy, const Ontology& ontology,
                           const VerbLexicon& lexicon, const EntityTagger* tagger = nullptr,
                           const PlanOptions& options = {});

nlohmann::json to_json(const EntityMention& mention);
nlohmann::json to_json(const ExpansionSet& expansion);

}  // namespace funnel
