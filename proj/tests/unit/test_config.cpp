#include <doctest.h>

#include <map>

#include "funnel/config.hpp"
#include "funnel/error.hpp"
#include "support/oracles.hpp"

using namespace funnel;
using nlohmann::json;

namespace {

EnvLookup env_of(const std::map<std::string, std::string>& vars) {
  return [vars](const char* name) -> const char* {
    auto it = vars.find(name);
    return it == vars.end() ? nullptr : it->second.c_str();
  };
}

}  // namespace

TEST_CASE("fixture config resolves paths relative to its directory") {
  const auto c = load_config(oracle::fixture("config.json"));
  CHECK(c.corpus == oracle::fixture("corpus.jsonl").string());
  CHECK(c.lexicon == oracle::fixture("lexicon.tsv").string());
  CHECK(c.index.empty());
  CHECK(c.embedder.kind == EmbedderKind::reference);
  CHECK(c.embedder.dimension == 256);
  CHECK(c.scorer.kind == "lexical");
  CHECK(c.port == 8080);
  CHECK(c.host == "127.0.0.1");
}

TEST_CASE("nested sections and defaults") {
  const auto c = config_from_json(json::parse(R"({
    "corpus": "/abs/corpus.jsonl",
    "embedder": {"kind": "remote", "endpoint": "http://h:1/embed", "timeout_ms": 250, "dimension": 8},
    "scorer": {"kind": "remote", "endpoint": "http://h:2/score"},
    "pipeline": {"hops": 2, "per_hop": 4, "alpha": 0.25, "context_budget": 64},
    "unknown": 1
  })"), "/base");
  CHECK(c.corpus == "/abs/corpus.jsonl");
  CHECK(c.embedder.kind == EmbedderKind::remote);
  CHECK(c.embedder.timeout == std::chrono::milliseconds(250));
  CHECK(c.embedder.dimension == 8);
  CHECK(c.scorer.endpoint == "http://h:2/score");
  CHECK(c.pipeline.multihop.hops == 2);
  CHECK(c.pipeline.multihop.per_hop == 4);
  CHECK(c.pipeline.multihop.alpha == 0.25);
  CHECK(c.pipeline.context_budget == 64);
  CHECK(c.pipeline.k_rrf == 60.0);
  CHECK(c.trace_capacity == 1000);

  CHECK_THROWS_AS(config_from_json(json::parse(R"({"embedder": {"kind": "magic"}})")), Error);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"port": "eighty"})")), Error);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), Error);
}

TEST_CASE("environment overrides") {
  AppConfig c;
  apply_env_overrides(c, env_of({{"FUNNEL_CORPUS", "/x/c.jsonl"},
                                 {"FUNNEL_EMBEDDER", "remote"},
                                 {"FUNNEL_EMBEDDER_ENDPOINT", "http://e/embed"},
                                 {"FUNNEL_EMBEDDER_DIM", "32"},
                                 {"FUNNEL_EMBEDDER_TIMEOUT_MS", "75"},
                                 {"FUNNEL_SCORER", "remote"},
                                 {"FUNNEL_SCORER_ENDPOINT", "http://s/score"},
                                 {"FUNNEL_PORT", "9091"},
                                 {"FUNNEL_TRACE_SPILL", "/tmp/spill"}}));
  CHECK(c.corpus == "/x/c.jsonl");
  CHECK(c.embedder.kind == EmbedderKind::remote);
  CHECK(c.embedder.endpoint == "http://e/embed");
  CHECK(c.embedder.dimension == 32);
  CHECK(c.embedder.timeout == std::chrono::milliseconds(75));
  CHECK(c.scorer.kind == "remote");
  CHECK(c.port == 9091);
  CHECK(c.trace_spill_dir == "/tmp/spill");
  CHECK(c.host == "127.0.0.1");

  AppConfig untouched;
  apply_env_overrides(untouched, env_of({}));
  CHECK(untouched.port == 8080);
  CHECK_THROWS_AS(apply_env_overrides(untouched, env_of({{"FUNNEL_PORT", "80a"}})), Error);
}

TEST_CASE("scorer factory") {
  CHECK(make_scorer({})->name() == "lexical-idf-overlap");
  CHECK(make_scorer({"remote", "http://h:1/score", std::chrono::milliseconds(10)})->name() == "remote:http://h:1/score");
  CHECK_THROWS_AS(make_scorer({"remote", "", std::chrono::milliseconds(10)}), Error);
  CHECK_THROWS_AS(make_scorer({"neural", "", std::chrono::milliseconds(10)}), Error);
}
