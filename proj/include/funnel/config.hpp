#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>

#include <json.hpp>

#include "funnel/docqa.hpp"
#include "funnel/embed.hpp"

namespace funnel {

struct ScorerConfig {
  std::string kind = "lexical";  // or "remote"
  std::string endpoint;
  std::chrono::milliseconds timeout{5000};
};

struct AppConfig {
  std::string corpus;
  std::string ontology;
  std::string lexicon;
  std::string index;
  EmbedderConfig embedder;
  ScorerConfig scorer;
  PipelineConfig pipeline;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t trace_capacity = 1000;
  std::string trace_spill_dir;
  std::size_t chunk_cache_capacity = 32;
};

/// Keys mirror AppConfig; unknown keys are ignored. Relative paths resolve
/// against `base_dir`.
AppConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
AppConfig load_config(const std::filesystem::path& path);

using EnvLookup = std::function<const char*(const char*)>;

/// FUNNEL_CORPUS, FUNNEL_ONTOLOGY, FUNNEL_LEXICON, FUNNEL_INDEX, FUNNEL_EMBEDDER,
/// FUNNEL_EMBEDDER_ENDPOINT, FUNNEL_EMBEDDER_DIM, FUNNEL_EMBEDDER_SEED,
/// FUNNEL_EMBEDDER_TIMEOUT_MS, FUNNEL_SCORER, FUNNEL_SCORER_ENDPOINT,
/// FUNNEL_HOST, FUNNEL_PORT, FUNNEL_TRACE_SPILL.
void apply_env_overrides(AppConfig& config, const EnvLookup& env);
void apply_env_overrides(AppConfig& config);

std::unique_ptr<PairScorer> make_scorer(const ScorerConfig& config);

}  // namespace funnel
