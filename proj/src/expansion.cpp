#include "funnel/expansion.hpp"

#include <algorithm>
#include <set>

#include "funnel/error.hpp"
#include "funnel/text.hpp"

namespace funnel {

using nlohmann::json;

namespace {

bool overlaps(std::size_t b1, std::size_t e1, std::size_t b2, std::size_t e2) { return b1 < e2 && b2 < e1; }

bool inside_any(const Token& w, const std::vector<EntityMention>& mentions) {
  return std::any_of(mentions.begin(), mentions.end(),
                     [&](const EntityMention& m) { return overlaps(w.begin, w.end, m.begin, m.end); });
}

std::string dedupe_key(std::string_view text) { return to_lower_ascii(trim(text)); }

}  // namespace

std::vector<EntityMention> extract_entities(std::string_view query, const Ontology& ontology) {
  struct Candidate {
    std::size_t begin;
    std::size_t end;
    std::string concept_id;
    bool is_label;
  };

  const auto words = segment_words(query);
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto* bucket = ontology.surfaces_starting_with(words[i].text);
    if (bucket == nullptr) continue;
    for (const auto& s : *bucket) {
      const std::size_t len = s.words.size();
      if (i + len > words.size()) continue;
      bool match = true;
      for (std::size_t k = 1; k < len && match; ++k) match = words[i + k].text == s.words[k];
      if (match) candidates.push_back({words[i].begin, words[i + len - 1].end, s.concept_id, s.is_label});
    }
  }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    const auto la = a.end - a.begin;
    const auto lb = b.end - b.begin;
    if (la != lb) return la > lb;
    if (a.begin != b.begin) return a.begin < b.begin;
    if (a.is_label != b.is_label) return a.is_label;
    return a.concept_id < b.concept_id;
  });

  std::vector<EntityMention> accepted;
  for (const auto& c : candidates) {
    const bool clash = std::any_of(accepted.begin(), accepted.end(),
                                   [&](const EntityMention& m) { return overlaps(c.begin, c.end, m.begin, m.end); });
    if (clash) continue;
    accepted.push_back({std::string(query.substr(c.begin, c.end - c.begin)), c.begin, c.end, c.concept_id});
  }
  std::sort(accepted.begin(), accepted.end(),
            [](const EntityMention& a, const EntityMention& b) { return a.begin < b.begin; });
  return accepted;
}

ExpansionSet expand_entity(std::string_view concept_id, const Ontology& ontology) {
  const OntologyEntry* entry = ontology.find(concept_id);
  if (entry == nullptr) throw Error(Errc::unknown_concept, std::string(concept_id));

  ExpansionSet out{entry->concept_id, {}};
  std::set<std::string> seen;
  auto add = [&](const std::string& text, Tier tier) {
    if (trim(text).empty()) return;
    if (!seen.insert(dedupe_key(text)).second) return;
    out.variations.push_back({text, tier});
  };
  add(entry->label, Tier::exact);
  for (const auto& s : entry->synonyms) add(s, Tier::synonym);
  for (const auto& id : entry->hyponyms) add(ontology.find(id)->label, Tier::hyponym);
  for (const auto& id : entry->hypernyms) add(ontology.find(id)->label, Tier::hypernym);
  return out;
}

double TierWeights::operator()(Tier tier) const {
  switch (tier) {
    case Tier::exact: return exact;
    case Tier::synonym: return synonym;
    case Tier::hyponym: return hyponym;
    case Tier::hypernym: return hypernym;
  }
  return exact;
}

std::vector<VariationGroup> expand_verbs(std::string_view query, const std::vector<EntityMention>& mentions,
                                         const VerbLexicon& lexicon, const TierWeights& weights) {
  std::vector<VariationGroup> groups;
  std::set<std::string> seen;
  for (const auto& w : segment_words(query)) {
    if (inside_any(w, mentions)) continue;
    const auto* synonyms = lexicon.find(w.text);
    if (synonyms == nullptr || !seen.insert(w.text).second) continue;
    VariationGroup g{Origin::verb, 1.0, {{w.text, weights.exact, Tier::exact}}};
    std::set<std::string> texts{dedupe_key(w.text)};
    for (const auto& s : *synonyms) {
      if (texts.insert(dedupe_key(s)).second) g.variations.push_back({s, weights.synonym, Tier::synonym});
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::most_fields: return "most-fields";
    case Strategy::must_expansion: return "must-expansion";
    case Strategy::should_expansion: return "should-expansion";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view text) {
  for (Strategy s : {Strategy::most_fields, Strategy::must_expansion, Strategy::should_expansion}) {
    if (to_string(s) == text) return s;
  }
  throw Error(Errc::invalid_argument, "unknown strategy '" + std::string(text) + "'");
}

json to_json(const EntityMention& m) {
  return {{"surface", m.surface}, {"start", m.begin}, {"end", m.end}, {"concept_id", m.concept_id}};
}

json to_json(const ExpansionSet& e) {
  json vars = json::array();
  for (const auto& v : e.variations) vars.push_back({{"text", v.text}, {"tier", to_string(v.tier)}});
  return {{"concept_id", e.concept_id}, {"variations", std::move(vars)}};
}

namespace {

void check_mentions(std::string_view query, std::vector<EntityMention>& mentions) {
  std::sort(mentions.begin(), mentions.end(),
            [](const EntityMention& a, const EntityMention& b) { return a.begin < b.begin; });
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    const auto& m = mentions[i];
    if (m.begin >= m.end || m.end > query.size()) throw Error(Errc::invalid_argument, "entity span out of bounds");
    if (i > 0 && mentions[i - 1].end > m.begin) throw Error(Errc::invalid_argument, "entity spans overlap");
  }
}

}  // namespace

PlanBuild build_query_plan(std::string_view query, Strategy strategy, const Ontology& ontology,
                           const VerbLexicon& lexicon, const EntityTagger* tagger, const PlanOptions& options) {
  if (segment_words(query).empty()) throw Error(Errc::empty_query, "query has no words");

  PlanBuild out;
  out.mentions = tagger != nullptr ? tagger->tag(query) : extract_entities(query, ontology);
  check_mentions(query, out.mentions);

  json mentions_json = json::array();
  for (const auto& m : out.mentions) mentions_json.push_back(to_json(m));
  out.events.push_back({0, std::string(stage::entities), {{"query", query}, {"mentions", mentions_json}}});

  std::vector<VariationGroup> verbs;
  if (strategy == Strategy::most_fields) {
    out.plan.should.push_back({Origin::residual, 1.0, {{std::string(trim(query)), options.weights.exact, Tier::exact}}});
  } else {
    std::set<std::string> concepts;
    std::vector<VariationGroup> entity_groups;
    for (const auto& m : out.mentions) {
      if (!concepts.insert(m.concept_id).second) continue;
      auto expansion = expand_entity(m.concept_id, ontology);
      VariationGroup g{Origin::entity, options.entity_boost, {}};
      for (const auto& v : expansion.variations) g.variations.push_back({v.text, options.weights(v.tier), v.tier});
      entity_groups.push_back(std::move(g));
      out.expansions.push_back(std::move(expansion));
    }

    verbs = expand_verbs(query, out.mentions, lexicon, options.weights);
    for (auto& g : verbs) g.boost = options.verb_boost;

    std::set<std::string> verb_words;
    for (const auto& g : verbs) verb_words.insert(g.variations.front().text);
    std::string residual;
    std::set<std::string> residual_seen;
    for (const auto& t : segment_words(query)) {
      if (inside_any(t, out.mentions) || verb_words.contains(t.text) || !residual_seen.insert(t.text).second) continue;
      if (!residual.empty()) residual += ' ';
      residual += t.text;
    }

    auto& entity_target = strategy == Strategy::must_expansion ? out.plan.must : out.plan.should;
    for (auto& g : entity_groups) entity_target.push_back(std::move(g));
    for (const auto& g : verbs) out.plan.should.push_back(g);
    if (!residual.empty()) {
      out.plan.should.push_back({Origin::residual, options.residual_boost, {{residual, options.weights.exact, Tier::exact}}});
    }
  }

  json expansions_json = json::array();
  for (const auto& e : out.expansions) expansions_json.push_back(to_json(e));
  json verbs_json = json::array();
  for (const auto& g : verbs) verbs_json.push_back(to_json(g));
  out.events.push_back({0, std::string(stage::expansion),
                        {{"strategy", to_string(strategy)}, {"entities", expansions_json}, {"verbs", verbs_json}}});
  out.events.push_back(
      {0, std::string(stage::plan), {{"strategy", to_string(strategy)}, {"override", false}, {"tree", to_json(out.plan)}}});
  return out;
}

}  // namespace funnel
