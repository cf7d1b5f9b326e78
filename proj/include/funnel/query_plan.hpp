#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace funnel {

/// Where a clause came from. `residual` holds query words that are neither
/// entities nor lexicon verbs (and the whole query under most-fields).
enum class Origin { entity, verb, residual };

/// Precision tier of a variation relative to the query term.
enum class Tier { exact, synonym, hyponym, hypernym };

std::string_view to_string(Origin origin);
std::string_view to_string(Tier tier);
Origin parse_origin(std::string_view text);
Tier parse_tier(std::string_view text);

struct Variation {
  std::string text;
  double weight = 1.0;
  Tier tier = Tier::exact;

  friend bool operator==(const Variation&, const Variation&) = default;
};

struct VariationGroup {
  Origin origin = Origin::entity;
  double boost = 1.0;
  std::vector<Variation> variations;

  friend bool operator==(const VariationGroup&, const VariationGroup&) = default;
};

/// Boolean clause tree. A document must match every MUST group (if any);
/// SHOULD groups add score, and filter only when there is no MUST group.
struct QueryPlan {
  std::vector<VariationGroup> must;
  std::vector<VariationGroup> should;

  bool empty() const noexcept { return must.empty() && should.empty(); }
  /// Throws InvalidArgument on an empty group, boost <= 0, or weight outside (0, 1].
  void validate() const;

  friend bool operator==(const QueryPlan&, const QueryPlan&) = default;
};

/// The clause-tree exchange format:
/// {"must":[group], "should":[group]}, group = {"origin","boost","variations":[{"text","weight","tier"}]}.
nlohmann::json to_json(const QueryPlan& plan);
nlohmann::json to_json(const VariationGroup& group);
/// Throws ParseError on malformed input or a plan that fails validate().
QueryPlan plan_from_json(const nlohmann::json& tree);

}  // namespace funnel
