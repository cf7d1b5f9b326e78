#include <doctest.h>

#include <thread>

#include "funnel/config.hpp"
#include "funnel/error.hpp"
#include "funnel/service.hpp"
#include "support/http_stub.hpp"
#include "support/oracles.hpp"

using namespace funnel;
using nlohmann::json;

namespace {

AppConfig fixture_config() { return load_config(oracle::fixture("config.json")); }

AppConfig document_config() {
  auto c = fixture_config();
  c.corpus = oracle::fixture("document.jsonl").string();
  return c;
}

std::unique_ptr<Service> make_service(const AppConfig& c) {
  return std::make_unique<Service>(load_resources(c), c);
}

ApiResponse post(Service& s, const std::string& path, const json& body) { return s.dispatch("POST", path, body.dump()); }

std::vector<std::string> stages_of(const json& trace) {
  std::vector<std::string> out;
  for (const auto& e : trace.at("events")) out.push_back(e.at("stage"));
  return out;
}

const std::vector<std::string> kSearchStages{"entities", "expansion", "plan", "retrieve"};

std::vector<std::string> ask_stages(std::initializer_list<const char*> tail) {
  std::vector<std::string> s{"chunking", "sparse", "dense-hop-1", "dense-hop-2", "dense-hop-3", "fusion"};
  s.insert(s.end(), tail.begin(), tail.end());
  return s;
}

}  // namespace

TEST_CASE("api error mapping") {
  CHECK(http_status(ApiCode::bad_request) == 400);
  CHECK(http_status(ApiCode::not_found) == 404);
  CHECK(http_status(ApiCode::conflict) == 409);
  CHECK(http_status(ApiCode::upstream_failure) == 502);
  CHECK(http_status(ApiCode::internal) == 500);
  CHECK(classify(Errc::empty_query) == ApiCode::bad_request);
  CHECK(classify(Errc::timeout) == ApiCode::upstream_failure);
  CHECK(classify(Errc::scorer_failure) == ApiCode::upstream_failure);
  CHECK(classify(Errc::duplicate_id) == ApiCode::conflict);
  const auto e = api_error(ApiCode::not_found, "gone", "d9");
  CHECK(e.status == 404);
  CHECK(e.body == json{{"code", "not_found"}, {"message", "gone"}, {"detail", "d9"}});
}

TEST_CASE("search endpoint") {
  auto svc = make_service(fixture_config());
  const auto r = post(*svc, "/search", {{"query", "does aspirin prevent heart attack"}, {"k", 3}});
  REQUIRE(r.status == 200);
  const auto& results = r.body.at("results");
  REQUIRE(results.size() == 3);
  CHECK(results[0].at("doc_id") == "d1");
  CHECK(results[0].at("rank") == 1);
  CHECK(results[0].at("title") == "Aspirin study");
  CHECK_FALSE(results[0].at("snippet").get<std::string>().empty());
  CHECK(r.body.at("strategy") == "should-expansion");

  const auto trace = svc->get_trace(r.body.at("trace_id"));
  REQUIRE(trace.status == 200);
  CHECK(stages_of(trace.body) == kSearchStages);
  for (const auto& e : trace.body.at("events")) CHECK(e.contains("timestamp"));

  CHECK(post(*svc, "/search", {{"query", "  "}}).status == 400);
  CHECK(post(*svc, "/search", {{"query", "aspirin"}, {"strategy", "fuzzy"}}).status == 400);
  CHECK(post(*svc, "/search", {{"query", "aspirin"}, {"k", 0}}).status == 400);
  CHECK(svc->dispatch("POST", "/search", "{not json").status == 400);
  CHECK(svc->dispatch("GET", "/nowhere", "").status == 404);
}

TEST_CASE("must search with no results still traces fully") {
  auto svc = make_service(fixture_config());
  const auto r = post(*svc, "/search", {{"query", "does warfarin prevent stroke"}, {"strategy", "must-expansion"}});
  REQUIRE(r.status == 200);
  CHECK(r.body.at("results").empty());
  const auto trace = svc->get_trace(r.body.at("trace_id"));
  CHECK(stages_of(trace.body) == kSearchStages);
  CHECK(trace.body.at("events").back().at("payload").at("returned") == 0);
}

TEST_CASE("expansion preview") {
  auto svc = make_service(fixture_config());
  const auto r = post(*svc, "/expansion/preview", {{"query", "aspirin heart attack"}, {"strategy", "must-expansion"}});
  REQUIRE(r.status == 200);
  CHECK(r.body.at("mentions").size() == 2);
  CHECK(r.body.at("tree").at("must").size() == 2);
  CHECK(r.body.at("boosts").at("entity") == 2.0);

  const auto plain = post(*svc, "/expansion/preview", {{"query", "blood pressure exercise"}});
  REQUIRE(plain.status == 200);
  CHECK(plain.body.at("mentions").empty());
  CHECK(plain.body.at("tree").at("must").empty());
  REQUIRE(plain.body.at("tree").at("should").size() == 1);
  CHECK(plain.body.at("tree").at("should")[0].at("origin") == "residual");
  CHECK(post(*svc, "/expansion/preview", json::object()).status == 400);
}

TEST_CASE("override trees are executed and echoed verbatim") {
  auto svc = make_service(fixture_config());
  const auto preview = post(*svc, "/expansion/preview", {{"query", "aspirin heart attack"}});
  json tree = preview.body.at("tree");
  tree["should"][0]["variations"].erase(1);
  const auto r = post(*svc, "/search", {{"override", tree}, {"session", "s1"}});
  REQUIRE(r.status == 200);
  const auto trace = svc->get_trace(r.body.at("trace_id"));
  CHECK(stages_of(trace.body) == std::vector<std::string>{"plan", "retrieve"});
  const auto& plan_payload = trace.body.at("events")[0].at("payload");
  CHECK(plan_payload.at("override") == true);
  CHECK(plan_payload.at("tree").dump() == tree.dump());
  CHECK(svc->session("s1").last_tree->dump() == tree.dump());

  json broken = tree;
  broken["should"][0]["boost"] = -1;
  CHECK(post(*svc, "/search", {{"override", broken}}).status == 400);
}

TEST_CASE("ask endpoint outputs and errors") {
  auto svc = make_service(document_config());
  const std::string q = "Does aspirin raise the risk of bleeding?";
  CHECK(post(*svc, "/ask", {{"question", q}}).status == 400);
  CHECK(post(*svc, "/ask", {{"question", q}, {"doc_id", "missing"}}).status == 404);

  const auto ex = post(*svc, "/ask", {{"question", q}, {"doc_id", "aspirin-review"}, {"output", "extractive"}});
  REQUIRE(ex.status == 200);
  CHECK_FALSE(ex.body.at("passages").empty());
  CHECK(stages_of(svc->get_trace(ex.body.at("trace_id")).body) == ask_stages({"rerank", "extract"}));

  const auto ch = post(*svc, "/ask", {{"question", q}, {"doc_id", "aspirin-review"}, {"output", "chain"}});
  REQUIRE(ch.status == 200);
  CHECK(ch.body.at("chain").size() == 3);
  CHECK(stages_of(svc->get_trace(ch.body.at("trace_id")).body) == ask_stages({"rerank", "extract", "chain"}));

  const auto pk = post(*svc, "/ask", {{"question", q}, {"doc_id", "aspirin-review"}, {"output", "packed"}});
  REQUIRE(pk.status == 200);
  CHECK_FALSE(pk.body.at("context").empty());
  CHECK(stages_of(svc->get_trace(pk.body.at("trace_id")).body) == ask_stages({"pack"}));

  CHECK(svc->chunk_cache().builds() == 1);
  CHECK(svc->chunk_cache().size() == 1);
  CHECK(post(*svc, "/ask", {{"question", ""}, {"doc_id", "aspirin-review"}}).status == 400);
  CHECK(post(*svc, "/ask", {{"question", q}, {"doc_id", "aspirin-review"}, {"output", "poem"}}).status == 400);
}

TEST_CASE("sessions carry the selected document and stay isolated") {
  auto svc = make_service(document_config());
  CHECK(svc->dispatch("GET", "/documents/aspirin-review", "", {{"session", "a"}}).status == 200);
  CHECK(svc->dispatch("GET", "/documents/nope", "").status == 404);
  CHECK(svc->session("a").doc_id == "aspirin-review");
  CHECK_FALSE(svc->session("b").doc_id.has_value());
  CHECK(post(*svc, "/ask", {{"question", "why a low dose"}, {"session", "a"}}).status == 200);
  CHECK(post(*svc, "/ask", {{"question", "why a low dose"}, {"session", "b"}}).status == 400);
}

TEST_CASE("trace store ids, eviction and spill") {
  const auto dir = std::filesystem::temp_directory_path() / "funnel_test_spill";
  std::filesystem::remove_all(dir);
  TraceStore store(2, dir);
  Trace t;
  t.append("plan", json{{"n", 1}});
  const auto a = store.put(t);
  const auto b = store.put(t);
  const auto c = store.put(t);
  CHECK(a == "t00000001");
  CHECK(c == "t00000003");
  CHECK(store.size() == 2);
  REQUIRE(store.get(a).has_value());
  CHECK(store.get(a)->at("trace_id") == a);
  CHECK(std::filesystem::exists(dir / (a + ".json")));
  CHECK(store.get(b)->at("events")[0].at("payload") == json{{"n", 1}});
  CHECK_FALSE(store.get("t99999999").has_value());

  TraceStore bounded(1);
  const auto x = bounded.put(t);
  bounded.put(t);
  CHECK_FALSE(bounded.get(x).has_value());

  auto svc = make_service(fixture_config());
  CHECK(svc->get_trace("t12345678").status == 404);
}

TEST_CASE("chunk cache shares one build per document") {
  ChunkIndexCache cache(2);
  const ReferenceEmbedder e;
  const auto docs = load_corpus_file(oracle::fixture("corpus.jsonl")).corpus.documents();
  std::vector<std::shared_ptr<const ChunkIndex>> got(4);
  {
    std::vector<std::jthread> threads;
    for (int i = 0; i < 4; ++i) threads.emplace_back([&, i] { got[i] = cache.get(docs[0], e); });
  }
  for (const auto& g : got) CHECK(g == got[0]);
  CHECK(cache.builds() == 1);
  cache.get(docs[1], e);
  cache.get(docs[2], e);
  CHECK(cache.size() == 2);
  cache.get(docs[0], e);
  CHECK(cache.builds() == 4);
}

TEST_CASE("remote scorer failure maps to 502") {
  oracle::HttpStub stub("/score", [](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
    res.set_content("boom", "text/plain");
  });
  auto c = document_config();
  c.scorer = {"remote", stub.url("/score"), std::chrono::milliseconds(2000)};
  auto svc = make_service(c);
  const auto r = post(*svc, "/ask", {{"question", "bleeding risk"}, {"doc_id", "aspirin-review"}});
  CHECK(r.status == 502);
  CHECK(r.body.at("code") == "upstream_failure");

  const auto packed = post(*svc, "/ask", {{"question", "bleeding risk"}, {"doc_id", "aspirin-review"}, {"output", "packed"}});
  CHECK(packed.status == 200);
}

TEST_CASE("endpoints over real HTTP") {
  auto svc = make_service(document_config());
  const int port = svc->bind("127.0.0.1", 0);
  std::thread server([&] { svc->run(); });
  httplib::Client client("127.0.0.1", port);
  client.set_connection_timeout(2);

  httplib::Result health;
  for (int i = 0; i < 50 && !health; ++i) {
    health = client.Get("/healthz");
    if (!health) std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body).at("status") == "ok");

  const auto search = client.Post("/search", json{{"query", "aspirin bleeding"}}.dump(), "application/json");
  REQUIRE(search);
  CHECK(search->status == 200);
  const auto body = json::parse(search->body);
  CHECK(body.at("results")[0].at("doc_id") == "aspirin-review");

  const auto trace = client.Get(("/trace/" + body.at("trace_id").get<std::string>()).c_str());
  REQUIRE(trace);
  CHECK(stages_of(json::parse(trace->body)) == kSearchStages);

  const auto doc = client.Get("/documents/aspirin-review?session=web");
  REQUIRE(doc);
  CHECK(doc->status == 200);
  const auto ask = client.Post("/ask", json{{"question", "how does aspirin work"}, {"session", "web"}}.dump(),
                               "application/json");
  REQUIRE(ask);
  CHECK(ask->status == 200);
  CHECK(json::parse(ask->body).contains("chain"));

  const auto bad = client.Post("/search", "{}", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(json::parse(bad->body).at("code") == "bad_request");

  svc->stop();
  server.join();
}
