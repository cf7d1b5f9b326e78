#include "funnel/trace.hpp"

#include <array>
#include <charconv>

#include "funnel/error.hpp"

namespace funnel {

std::string stage::dense_hop(std::size_t hop) { return "dense-hop-" + std::to_string(hop); }

bool is_known_stage(std::string_view name) {
  static constexpr std::array fixed{stage::entities, stage::expansion, stage::plan,   stage::retrieve,
                                    stage::chunking, stage::sparse,    stage::fusion, stage::rerank,
                                    stage::extract,  stage::chain,     stage::pack};
  for (auto s : fixed) {
    if (s == name) return true;
  }
  constexpr std::string_view prefix = "dense-hop-";
  if (!name.starts_with(prefix)) return false;
  const auto digits = name.substr(prefix.size());
  if (digits.empty() || digits.front() == '0') return false;
  std::size_t hop = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), hop);
  return ec == std::errc{} && ptr == digits.data() + digits.size() && hop >= 1;
}

const TraceEvent& Trace::append(TraceEvent event) {
  if (!is_known_stage(event.stage)) throw Error(Errc::invalid_argument, "unknown trace stage '" + event.stage + "'");
  event.ordinal = events_.size() + 1;
  events_.push_back(std::move(event));
  return events_.back();
}

const TraceEvent& Trace::append(std::string_view stage, nlohmann::json payload) {
  return append(TraceEvent{0, std::string(stage), std::move(payload)});
}

std::vector<std::string> Trace::stages() const {
  std::vector<std::string> out;
  out.reserve(events_.size());
  for (const auto& e : events_) out.push_back(e.stage);
  return out;
}

nlohmann::json to_json(const TraceEvent& event) {
  return {{"ordinal", event.ordinal}, {"stage", event.stage}, {"payload", event.payload}};
}

nlohmann::json to_json(const Trace& trace) {
  auto out = nlohmann::json::array();
  for (const auto& e : trace.events()) out.push_back(to_json(e));
  return out;
}

bool is_well_formed(const std::vector<TraceEvent>& events) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].ordinal != i + 1 || !is_known_stage(events[i].stage)) return false;
  }
  return true;
}

}  // namespace funnel
