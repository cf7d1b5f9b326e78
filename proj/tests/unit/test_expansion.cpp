#include <doctest.h>

#include <random>

#include "funnel/error.hpp"
#include "funnel/expansion.hpp"
#include "support/oracles.hpp"

using namespace funnel;

namespace {

const Ontology& fixture_ontology() {
  static const Ontology o = load_ontology(oracle::fixture("ontology.jsonl")).ontology;
  return o;
}

const VerbLexicon& fixture_lexicon() {
  static const VerbLexicon l = load_verb_lexicon(oracle::fixture("lexicon.tsv"));
  return l;
}

std::vector<TieredText> tiers(std::initializer_list<std::pair<const char*, Tier>> items) {
  std::vector<TieredText> out;
  for (const auto& [t, tier] : items) out.push_back({t, tier});
  return out;
}

class FixedTagger final : public EntityTagger {
 public:
  std::vector<EntityMention> tag(std::string_view) const override { return {{"pain", 0, 4, "C005"}}; }
};

}  // namespace

TEST_CASE("gazetteer finds label mentions with spans") {
  const std::string q = "does aspirin prevent heart attack";
  const auto m = extract_entities(q, fixture_ontology());
  REQUIRE(m.size() == 2);
  CHECK(m[0].concept_id == "C001");
  CHECK(q.substr(m[0].begin, m[0].end - m[0].begin) == "aspirin");
  CHECK(m[1].concept_id == "C002");
  CHECK(q.substr(m[1].begin, m[1].end - m[1].begin) == "heart attack");
  // "attack" alone is a synonym of another concept; the longer span wins
  CHECK(fixture_ontology().lookup("attack") == std::vector<std::string>{"C007"});
}

TEST_CASE("gazetteer edge cases") {
  CHECK(extract_entities("nothing relevant here", fixture_ontology()).empty());
  CHECK(extract_entities("", fixture_ontology()).empty());
  const auto m = extract_entities("ASPIRIN, Heart Disease!", fixture_ontology());
  REQUIRE(m.size() == 2);
  CHECK(m[0].surface == "ASPIRIN");
  CHECK(m[1].concept_id == "C011");
  // word aligned: "aspirins" is not "aspirin"
  CHECK(extract_entities("aspirins", fixture_ontology()).empty());
  const auto syn = extract_entities("myocardial infarction after an attack", fixture_ontology());
  REQUIRE(syn.size() == 2);
  CHECK(syn[0].concept_id == "C002");
  CHECK(syn[1].concept_id == "C007");
}

TEST_CASE("expand_entity walks one hop in tier order") {
  const auto e = expand_entity("C001", fixture_ontology());
  CHECK(e.variations == tiers({{"aspirin", Tier::exact}, {"acetylsalicylic acid", Tier::synonym}, {"NSAID", Tier::hypernym}}));
  const auto nsaid = expand_entity("C010", fixture_ontology());
  CHECK(nsaid.variations == tiers({{"NSAID", Tier::exact},
                                   {"nonsteroidal anti-inflammatory drug", Tier::synonym},
                                   {"aspirin", Tier::hyponym},
                                   {"ibuprofen", Tier::hyponym}}));
  const auto lone = Ontology::from_entries({{"X", "lonely", {}, {}, {}}});
  CHECK(expand_entity("X", lone).variations == tiers({{"lonely", Tier::exact}}));
  CHECK_THROWS_AS(expand_entity("C999", fixture_ontology()), Error);
  const auto dup = Ontology::from_entries({{"X", "Pain", {"pain", "ache"}, {}, {}}});
  CHECK(expand_entity("X", dup).variations == tiers({{"Pain", Tier::exact}, {"ache", Tier::synonym}}));
}

TEST_CASE("verb expansion") {
  VerbLexicon lex;
  lex.add("prevent", {"avert", "stop"});
  const auto groups = expand_verbs("does aspirin prevent headaches", {}, lex);
  REQUIRE(groups.size() == 1);
  CHECK(groups[0].origin == Origin::verb);
  CHECK(groups[0].variations == std::vector<Variation>{{"prevent", 1.0, Tier::exact},
                                                       {"avert", 0.8, Tier::synonym},
                                                       {"stop", 0.8, Tier::synonym}});
  CHECK(expand_verbs("aspirin dosage", {}, lex).empty());

  VerbLexicon attack;
  attack.add("attack", {"strike"});
  const std::string q = "heart attack";
  const auto mentions = extract_entities(q, fixture_ontology());
  CHECK(expand_verbs(q, mentions, attack).empty());
  CHECK(expand_verbs("they attack", {}, attack).size() == 1);
}

TEST_CASE("plan shapes per strategy") {
  const std::string q = "does aspirin prevent heart attack";
  const auto must = build_query_plan(q, Strategy::must_expansion, fixture_ontology(), fixture_lexicon());
  CHECK(must.plan.must.size() == 2);
  for (const auto& g : must.plan.must) {
    CHECK(g.origin == Origin::entity);
    CHECK(g.boost == 2.0);
  }
  std::size_t verbs = 0, residual = 0;
  for (const auto& g : must.plan.should) {
    verbs += g.origin == Origin::verb ? 1 : 0;
    residual += g.origin == Origin::residual ? 1 : 0;
  }
  CHECK(verbs >= 1);
  CHECK(residual == 1);
  CHECK(must.expansions.size() == 2);

  const auto should = build_query_plan(q, Strategy::should_expansion, fixture_ontology(), fixture_lexicon());
  CHECK(should.plan.must.empty());
  CHECK(should.plan.should.size() == must.plan.should.size() + 2);

  const auto most = build_query_plan(q, Strategy::most_fields, fixture_ontology(), fixture_lexicon());
  CHECK(most.plan.must.empty());
  REQUIRE(most.plan.should.size() == 1);
  CHECK(most.plan.should[0].variations.size() == 1);
  CHECK(most.plan.should[0].variations[0].text == q);

  for (const auto* b : {&must, &should, &most}) {
    REQUIRE(b->events.size() == 3);
    CHECK(b->events[0].stage == "entities");
    CHECK(b->events[1].stage == "expansion");
    CHECK(b->events[2].stage == "plan");
    CHECK(b->events[2].payload.at("tree") == to_json(b->plan));
  }
}

TEST_CASE("no entities gives only a residual group") {
  const auto b = build_query_plan("exercise at home", Strategy::must_expansion, fixture_ontology(), VerbLexicon{});
  CHECK(b.plan.must.empty());
  REQUIRE(b.plan.should.size() == 1);
  CHECK(b.plan.should[0].origin == Origin::residual);
  CHECK(b.plan.should[0].variations[0].text == "exercise at home");
}

TEST_CASE("empty query is rejected") {
  for (auto s : {Strategy::most_fields, Strategy::must_expansion, Strategy::should_expansion}) {
    CHECK_THROWS_WITH_AS(build_query_plan("", s, fixture_ontology(), fixture_lexicon()),
                         doctest::Contains("EmptyQuery"), Error);
    CHECK_THROWS_AS(build_query_plan(" ?! ", s, fixture_ontology(), fixture_lexicon()), Error);
  }
}

TEST_CASE("strategy names") {
  for (auto s : {Strategy::most_fields, Strategy::must_expansion, Strategy::should_expansion}) {
    CHECK(parse_strategy(to_string(s)) == s);
  }
  CHECK_THROWS_AS(parse_strategy("fuzzy"), Error);
}

TEST_CASE("a plugged tagger replaces the gazetteer") {
  FixedTagger tagger;
  const auto b = build_query_plan("pain relief", Strategy::must_expansion, fixture_ontology(), VerbLexicon{}, &tagger);
  REQUIRE(b.plan.must.size() == 1);
  CHECK(b.plan.must[0].variations[0].text == "headache");
}

TEST_CASE("Must candidates are contained in Should candidates") {
  const auto corpus = load_corpus_file(oracle::fixture("corpus.jsonl")).corpus;
  const auto index = build_index(corpus);
  const std::vector<std::string> words = {"aspirin", "heart attack", "stroke", "warfarin", "prevent", "risk",
                                          "cholesterol", "ibuprofen", "kidney", "sleep", "reduce", "headache"};
  std::mt19937 rng(11);
  for (int i = 0; i < 100; ++i) {
    std::string q;
    const int n = 1 + static_cast<int>(rng() % 4);
    for (int w = 0; w < n; ++w) q += (w ? " " : "") + words[rng() % words.size()];
    const auto m = execute_query_plan(
        build_query_plan(q, Strategy::must_expansion, fixture_ontology(), fixture_lexicon()).plan, index, 1000);
    const auto s = execute_query_plan(
        build_query_plan(q, Strategy::should_expansion, fixture_ontology(), fixture_lexicon()).plan, index, 1000);
    for (const auto& hit : m.results) {
      const bool found = std::any_of(s.results.begin(), s.results.end(),
                                     [&](const ScoredDoc& x) { return x.doc_id == hit.doc_id; });
      CHECK_MESSAGE(found, q);
    }
  }
}
