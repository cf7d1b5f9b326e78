#include <doctest.h>

#include "funnel/error.hpp"
#include "funnel/query_plan.hpp"

using namespace funnel;
using nlohmann::json;

TEST_CASE("clause tree round-trips") {
  QueryPlan p;
  p.must.push_back({Origin::entity, 2.0, {{"aspirin", 1.0, Tier::exact}, {"NSAID", 0.4, Tier::hypernym}}});
  p.should.push_back({Origin::verb, 1.0, {{"prevent", 1.0, Tier::exact}, {"avert", 0.8, Tier::synonym}}});
  p.should.push_back({Origin::residual, 0.5, {{"risk", 1.0, Tier::exact}}});
  const auto j = to_json(p);
  CHECK(j.at("must").size() == 1);
  CHECK(j.at("should")[0].at("origin") == "verb");
  CHECK(plan_from_json(j) == p);
  CHECK(to_json(plan_from_json(json::parse(j.dump()))).dump() == j.dump());
}

TEST_CASE("enum names") {
  for (auto t : {Tier::exact, Tier::synonym, Tier::hyponym, Tier::hypernym}) CHECK(parse_tier(to_string(t)) == t);
  for (auto o : {Origin::entity, Origin::verb, Origin::residual}) CHECK(parse_origin(to_string(o)) == o);
  CHECK_THROWS_AS(parse_tier("cousin"), Error);
}

TEST_CASE("invalid trees are rejected") {
  CHECK_THROWS_AS(plan_from_json(json::parse(R"({"must":[{"origin":"entity","boost":1,"variations":[]}]})")), Error);
  CHECK_THROWS_AS(plan_from_json(json::parse(R"({"should":[{"origin":"entity","boost":0,
      "variations":[{"text":"a","weight":1,"tier":"exact"}]}]})")), Error);
  CHECK_THROWS_AS(plan_from_json(json::parse(R"({"should":[{"origin":"entity","boost":1,
      "variations":[{"text":"a","weight":1.5,"tier":"exact"}]}]})")), Error);
  CHECK_THROWS_AS(plan_from_json(json::parse(R"({"should":"x"})")), Error);
  CHECK_THROWS_AS(plan_from_json(json::parse(R"([1,2])")), Error);
  CHECK(plan_from_json(json::parse(R"({"must":[],"should":[]})")).empty());
}
