#include "funnel/query_plan.hpp"

#include "funnel/error.hpp"

namespace funnel {

using nlohmann::json;

std::string_view to_string(Origin origin) {
  switch (origin) {
    case Origin::entity: return "entity";
    case Origin::verb: return "verb";
    case Origin::residual: return "residual";
  }
  return "unknown";
}

std::string_view to_string(Tier tier) {
  switch (tier) {
    case Tier::exact: return "exact";
    case Tier::synonym: return "synonym";
    case Tier::hyponym: return "hyponym";
    case Tier::hypernym: return "hypernym";
  }
  return "unknown";
}

Origin parse_origin(std::string_view text) {
  for (Origin o : {Origin::entity, Origin::verb, Origin::residual}) {
    if (to_string(o) == text) return o;
  }
  throw Error(Errc::parse_error, "unknown origin '" + std::string(text) + "'");
}

Tier parse_tier(std::string_view text) {
  for (Tier t : {Tier::exact, Tier::synonym, Tier::hyponym, Tier::hypernym}) {
    if (to_string(t) == text) return t;
  }
  throw Error(Errc::parse_error, "unknown tier '" + std::string(text) + "'");
}

void QueryPlan::validate() const {
  auto check = [](const VariationGroup& g) {
    if (g.variations.empty()) throw Error(Errc::invalid_argument, "variation group without variations");
    if (!(g.boost > 0.0)) throw Error(Errc::invalid_argument, "group boost must be > 0");
    for (const auto& v : g.variations) {
      if (!(v.weight > 0.0 && v.weight <= 1.0)) throw Error(Errc::invalid_argument, "variation weight must be in (0, 1]");
    }
  };
  for (const auto& g : must) check(g);
  for (const auto& g : should) check(g);
}

json to_json(const VariationGroup& group) {
  json vars = json::array();
  for (const auto& v : group.variations) {
    vars.push_back({{"text", v.text}, {"weight", v.weight}, {"tier", to_string(v.tier)}});
  }
  return {{"origin", to_string(group.origin)}, {"boost", group.boost}, {"variations", std::move(vars)}};
}

json to_json(const QueryPlan& plan) {
  json must = json::array();
  json should = json::array();
  for (const auto& g : plan.must) must.push_back(to_json(g));
  for (const auto& g : plan.should) should.push_back(to_json(g));
  return {{"must", std::move(must)}, {"should", std::move(should)}};
}

namespace {

VariationGroup group_from_json(const json& j) {
  VariationGroup g;
  g.origin = parse_origin(j.at("origin").get<std::string>());
  g.boost = j.at("boost").get<double>();
  for (const auto& v : j.at("variations")) {
    Variation var;
    var.text = v.at("text").get<std::string>();
    var.weight = v.contains("weight") ? v.at("weight").get<double>() : 1.0;
    var.tier = v.contains("tier") ? parse_tier(v.at("tier").get<std::string>()) : Tier::exact;
    g.variations.push_back(std::move(var));
  }
  return g;
}

}  // namespace

QueryPlan plan_from_json(const json& tree) {
  QueryPlan plan;
  try {
    if (!tree.is_object()) throw Error(Errc::parse_error, "clause tree must be an object");
    if (auto it = tree.find("must"); it != tree.end()) {
      for (const auto& g : *it) plan.must.push_back(group_from_json(g));
    }
    if (auto it = tree.find("should"); it != tree.end()) {
      for (const auto& g : *it) plan.should.push_back(group_from_json(g));
    }
    plan.validate();
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::parse_error) throw;
    throw Error(Errc::parse_error, e.detail());
  }
  return plan;
}

}  // namespace funnel
