#include "funnel/config.hpp"

#include <cstdlib>
#include <fstream>

#include "funnel/error.hpp"

namespace funnel {

using nlohmann::json;

namespace {

std::string resolve(const std::string& value, const std::filesystem::path& base) {
  if (value.empty() || base.empty()) return value;
  std::filesystem::path p(value);
  return p.is_absolute() ? value : (base / p).lexically_normal().string();
}

EmbedderKind parse_embedder_kind(const std::string& s) {
  if (s == "reference") return EmbedderKind::reference;
  if (s == "remote") return EmbedderKind::remote;
  throw Error(Errc::invalid_argument, "unknown embedder kind '" + s + "'");
}

}  // namespace

AppConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  AppConfig c;
  try {
    c.corpus = resolve(j.value("corpus", ""), base_dir);
    c.ontology = resolve(j.value("ontology", ""), base_dir);
    c.lexicon = resolve(j.value("lexicon", ""), base_dir);
    c.index = resolve(j.value("index", ""), base_dir);
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.trace_capacity = j.value("trace_capacity", c.trace_capacity);
    c.trace_spill_dir = resolve(j.value("trace_spill_dir", ""), base_dir);
    c.chunk_cache_capacity = j.value("chunk_cache_capacity", c.chunk_cache_capacity);
    if (auto e = j.find("embedder"); e != j.end()) {
      c.embedder.kind = parse_embedder_kind(e->value("kind", "reference"));
      c.embedder.dimension = e->value("dimension", c.embedder.dimension);
      c.embedder.seed = e->value("seed", c.embedder.seed);
      c.embedder.endpoint = e->value("endpoint", "");
      c.embedder.timeout = std::chrono::milliseconds(e->value("timeout_ms", c.embedder.timeout.count()));
      c.embedder.batch_size = e->value("batch_size", c.embedder.batch_size);
      c.embedder.max_in_flight = e->value("max_in_flight", c.embedder.max_in_flight);
    }
    if (auto s = j.find("scorer"); s != j.end()) {
      c.scorer.kind = s->value("kind", c.scorer.kind);
      c.scorer.endpoint = s->value("endpoint", "");
      c.scorer.timeout = std::chrono::milliseconds(s->value("timeout_ms", c.scorer.timeout.count()));
    }
    if (auto p = j.find("pipeline"); p != j.end()) {
      auto& pc = c.pipeline;
      pc.sparse_depth = p->value("sparse_depth", pc.sparse_depth);
      pc.multihop.hops = p->value("hops", pc.multihop.hops);
      pc.multihop.per_hop = p->value("per_hop", pc.multihop.per_hop);
      pc.multihop.alpha = p->value("alpha", pc.multihop.alpha);
      pc.k_rrf = p->value("k_rrf", pc.k_rrf);
      pc.rerank_depth = p->value("rerank_depth", pc.rerank_depth);
      pc.top_passages = p->value("top_passages", pc.top_passages);
      pc.context_budget = p->value("context_budget", pc.context_budget);
    }
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("config: ") + e.what());
  }
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::file_not_found, path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("config: ") + e.what());
  }
  return config_from_json(j, path.parent_path());
}

void apply_env_overrides(AppConfig& c, const EnvLookup& env) {
  auto get = [&](const char* name) -> std::optional<std::string> {
    const char* v = env(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
  auto number = [&](const char* name, const std::string& v) -> long long {
    try {
      std::size_t used = 0;
      const long long n = std::stoll(v, &used);
      if (used != v.size()) throw std::invalid_argument(name);
      return n;
    } catch (const std::exception&) {
      throw Error(Errc::invalid_argument, std::string(name) + " must be an integer");
    }
  };
  if (auto v = get("FUNNEL_CORPUS")) c.corpus = *v;
  if (auto v = get("FUNNEL_ONTOLOGY")) c.ontology = *v;
  if (auto v = get("FUNNEL_LEXICON")) c.lexicon = *v;
  if (auto v = get("FUNNEL_INDEX")) c.index = *v;
  if (auto v = get("FUNNEL_EMBEDDER")) c.embedder.kind = parse_embedder_kind(*v);
  if (auto v = get("FUNNEL_EMBEDDER_ENDPOINT")) c.embedder.endpoint = *v;
  if (auto v = get("FUNNEL_EMBEDDER_DIM")) c.embedder.dimension = static_cast<std::size_t>(number("FUNNEL_EMBEDDER_DIM", *v));
  if (auto v = get("FUNNEL_EMBEDDER_SEED")) c.embedder.seed = static_cast<std::uint64_t>(number("FUNNEL_EMBEDDER_SEED", *v));
  if (auto v = get("FUNNEL_EMBEDDER_TIMEOUT_MS")) {
    c.embedder.timeout = std::chrono::milliseconds(number("FUNNEL_EMBEDDER_TIMEOUT_MS", *v));
  }
  if (auto v = get("FUNNEL_SCORER")) c.scorer.kind = *v;
  if (auto v = get("FUNNEL_SCORER_ENDPOINT")) c.scorer.endpoint = *v;
  if (auto v = get("FUNNEL_HOST")) c.host = *v;
  if (auto v = get("FUNNEL_PORT")) c.port = static_cast<int>(number("FUNNEL_PORT", *v));
  if (auto v = get("FUNNEL_TRACE_SPILL")) c.trace_spill_dir = *v;
}

void apply_env_overrides(AppConfig& config) {
  apply_env_overrides(config, [](const char* name) { return std::getenv(name); });
}

std::unique_ptr<PairScorer> make_scorer(const ScorerConfig& config) {
  if (config.kind == "lexical") return std::make_unique<LexicalPairScorer>();
  if (config.kind == "remote") {
    if (config.endpoint.empty()) throw Error(Errc::invalid_argument, "remote scorer needs an endpoint");
    return std::make_unique<RemotePairScorer>(config.endpoint, config.timeout);
  }
  throw Error(Errc::invalid_argument, "unknown scorer kind '" + config.kind + "'");
}

}  // namespace funnel
