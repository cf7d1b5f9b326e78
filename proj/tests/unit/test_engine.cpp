#include <doctest.h>

#include "funnel/config.hpp"
#include "funnel/engine.hpp"
#include "funnel/error.hpp"
#include "support/oracles.hpp"

using namespace funnel;

namespace {

const Resources& fixture_resources() {
  static const Resources r = load_resources(load_config(oracle::fixture("config.json")));
  return r;
}

}  // namespace

TEST_CASE("resources load from the fixture config") {
  const auto& r = fixture_resources();
  REQUIRE(r.corpus);
  CHECK(r.corpus->size() == 8);
  CHECK(r.index->doc_count() == 8);
  CHECK(r.ontology->size() == 11);
  CHECK(r.corpus_errors.empty());
  CHECK(r.ontology_warnings.empty());

  AppConfig bare;
  bare.corpus = oracle::fixture("corpus.jsonl").string();
  const auto plain = load_resources(bare);
  CHECK(plain.ontology->size() == 0);
  CHECK(plain.index->doc_count() == 8);

  AppConfig none;
  CHECK_THROWS_AS(load_resources(none), Error);
}

TEST_CASE("search traces every stage") {
  const SearchEngine engine(fixture_resources());
  const auto out = engine.search({"does aspirin prevent heart attack", Strategy::should_expansion, 5, std::nullopt});
  CHECK(out.trace.stages() == std::vector<std::string>{"entities", "expansion", "plan", "retrieve"});
  REQUIRE_FALSE(out.results.empty());
  CHECK(out.results.front().doc_id == "d1");
  CHECK(out.results.size() <= 5);
  CHECK(out.plan.should.size() == 4);
}

TEST_CASE("search results match the brute-force executor") {
  const auto& r = fixture_resources();
  const SearchEngine engine(r);
  for (Strategy s : {Strategy::most_fields, Strategy::must_expansion, Strategy::should_expansion}) {
    for (const std::string q : {"aspirin heart attack", "stroke risk", "nsaid kidney", "cholesterol diet"}) {
      const auto out = engine.search({q, s, 10, std::nullopt});
      const auto want = oracle::execute_plan(*r.corpus, r.index->config(), out.plan, 10);
      REQUIRE(out.results.size() == want.size());
      for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(out.results[i].doc_id == want[i].doc_id);
        CHECK(out.results[i].score == doctest::Approx(want[i].score).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("override plans skip expansion") {
  const SearchEngine engine(fixture_resources());
  const auto built = engine.preview("aspirin heart attack", Strategy::must_expansion);
  SearchRequest req{"", Strategy::most_fields, 10, built.plan};
  const auto out = engine.search(req);
  CHECK(out.trace.stages() == std::vector<std::string>{"plan", "retrieve"});
  CHECK(out.trace.events()[0].payload.at("override") == true);
  CHECK(out.trace.events()[0].payload.at("tree") == to_json(built.plan));
  CHECK(out.results == engine.search({"aspirin heart attack", Strategy::must_expansion, 10, std::nullopt}).results);
}

TEST_CASE("empty results still produce a complete trace") {
  const SearchEngine engine(fixture_resources());
  const auto out = engine.search({"does warfarin prevent stroke", Strategy::must_expansion, 10, std::nullopt});
  CHECK(out.results.empty());
  CHECK(out.trace.stages() == std::vector<std::string>{"entities", "expansion", "plan", "retrieve"});
  CHECK(out.trace.events().back().payload.at("returned") == 0);
  CHECK_THROWS_AS(engine.search({"   ", Strategy::most_fields, 10, std::nullopt}), Error);
  CHECK_THROWS_AS(engine.search({"aspirin", Strategy::most_fields, 0, std::nullopt}), Error);
}
