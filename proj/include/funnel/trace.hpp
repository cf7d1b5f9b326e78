#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace funnel {

/// One user-inspectable checkpoint. Pipelines emit events with ordinal 0;
/// a Trace assigns ordinals 1..n as events are appended.
struct TraceEvent {
  std::size_t ordinal = 0;
  std::string stage;
  nlohmann::json payload;
};

namespace stage {
inline constexpr std::string_view entities = "entities";
inline constexpr std::string_view expansion = "expansion";
inline constexpr std::string_view plan = "plan";
inline constexpr std::string_view retrieve = "retrieve";
inline constexpr std::string_view chunking = "chunking";
inline constexpr std::string_view sparse = "sparse";
inline constexpr std::string_view fusion = "fusion";
inline constexpr std::string_view rerank = "rerank";
inline constexpr std::string_view extract = "extract";
inline constexpr std::string_view chain = "chain";
inline constexpr std::string_view pack = "pack";

/// "dense-hop-<n>", n >= 1.
std::string dense_hop(std::size_t hop);
}  // namespace stage

/// True for names in the closed stage vocabulary above.
bool is_known_stage(std::string_view name);

class Trace {
 public:
  const TraceEvent& append(TraceEvent event);
  const TraceEvent& append(std::string_view stage, nlohmann::json payload);

  const std::vector<TraceEvent>& events() const noexcept { return events_; }
  std::vector<std::string> stages() const;
  bool empty() const noexcept { return events_.empty(); }
  std::size_t size() const noexcept { return events_.size(); }

 private:
  std::vector<TraceEvent> events_;
};

nlohmann::json to_json(const TraceEvent& event);
nlohmann::json to_json(const Trace& trace);

/// Contiguous ordinals from 1 and every stage name known.
bool is_well_formed(const std::vector<TraceEvent>& events);

}  // namespace funnel
