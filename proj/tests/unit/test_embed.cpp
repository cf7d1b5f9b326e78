#include <doctest.h>

#include <atomic>
#include <cmath>

#include "funnel/embed.hpp"
#include "funnel/error.hpp"
#include "support/http_stub.hpp"

using namespace funnel;
using nlohmann::json;

namespace {

EmbedderConfig reference(std::size_t d = 256, std::uint64_t seed = 0) {
  EmbedderConfig c;
  c.dimension = d;
  c.seed = seed;
  return c;
}

EmbedderConfig remote(const std::string& url, std::size_t d, int timeout_ms = 2000) {
  EmbedderConfig c;
  c.kind = EmbedderKind::remote;
  c.endpoint = url;
  c.dimension = d;
  c.timeout = std::chrono::milliseconds(timeout_ms);
  return c;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::invalid_argument;
}

// Echo service: the vector for text i has its mass on coordinate i.
void one_hot(const httplib::Request& req, httplib::Response& res, std::size_t d, std::size_t drop = 0) {
  const auto texts = json::parse(req.body).at("texts");
  json vectors = json::array();
  for (std::size_t i = 0; i + drop < texts.size(); ++i) {
    std::vector<double> v(d, 0.0);
    v[std::stoul(texts[i].get<std::string>()) % d] = 3.0;
    vectors.push_back(v);
  }
  res.set_content(json{{"vectors", vectors}}.dump(), "application/json");
}

}  // namespace

TEST_CASE("fnv1a64 test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("a", 1) != fnv1a64("a"));
}

TEST_CASE("reference embedding matches an independent computation") {
  const auto v = embed_text("The cat sat on the mat; dog ran", reference(64, 42));
  REQUIRE(v.dimension() == 64);
  CHECK_FALSE(v.zero);
  const float s = 0.4472135901451111F;
  for (std::size_t i = 0; i < 64; ++i) {
    float expected = 0.0F;
    if (i == 3 || i == 39) expected = s;
    if (i == 17 || i == 20 || i == 33) expected = -s;
    CHECK(v.values[i] == expected);
  }
}

TEST_CASE("reference embedding is deterministic and unit length") {
  const auto a = embed_text("cat sat", reference());
  const auto b = embed_text("cat sat", reference());
  CHECK(a.values == b.values);
  double sq = 0;
  for (float x : a.values) sq += static_cast<double>(x) * x;
  CHECK(sq == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(embed_text("cat sat", reference(256, 1)).values != a.values);
}

TEST_CASE("empty text gives a flagged zero vector") {
  for (const char* text : {"", "the of and", "  "}) {
    const auto v = embed_text(text, reference());
    CHECK(v.zero);
    CHECK(std::all_of(v.values.begin(), v.values.end(), [](float x) { return x == 0.0F; }));
  }
}

TEST_CASE("cosine similarity") {
  const auto a = embed_text("aspirin heart", reference());
  CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
  EmbeddingVector e1{{1, 0, 0, 0}, false}, e2{{0, 1, 0, 0}, false};
  CHECK(cosine_similarity(e1, e2) == 0.0);
  EmbeddingVector neg{{-1, 0, 0, 0}, false};
  CHECK(cosine_similarity(e1, neg) == -1.0);
  const auto zero = embed_text("", reference());
  CHECK(cosine_similarity(a, zero) == 0.0);
  CHECK(code_of([&] { cosine_similarity(a, embed_text("x", reference(128))); }) == Errc::dimension_mismatch);
}

TEST_CASE("config validation and keys") {
  CHECK_THROWS_AS(reference(0).validate(), Error);
  CHECK_THROWS_AS(remote("", 8).validate(), Error);
  CHECK(reference(256, 3).key() == "reference:d=256:seed=3");
  CHECK(make_embedder(reference(32))->dimension() == 32);
  CHECK(split_endpoint("http://h:1/embed") == std::pair<std::string, std::string>{"http://h:1", "/embed"});
  CHECK(split_endpoint("http://h:1") == std::pair<std::string, std::string>{"http://h:1", "/"});
}

TEST_CASE("remote embedder preserves order across batches") {
  std::atomic<int> calls{0};
  oracle::HttpStub stub("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    one_hot(req, res, 8);
  });
  auto cfg = remote(stub.url("/embed"), 8);
  cfg.batch_size = 2;
  cfg.max_in_flight = 2;
  const std::vector<std::string> texts{"0", "1", "2", "3", "4"};
  const auto out = RemoteEmbedder(cfg).embed(texts);
  REQUIRE(out.size() == 5);
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].values[i] == 1.0F);  // renormalised locally
  }
  CHECK(calls == 3);
}

TEST_CASE("remote embedder count and dimension checks") {
  oracle::HttpStub short_stub("/embed", [](const httplib::Request& req, httplib::Response& res) { one_hot(req, res, 8, 1); });
  const std::vector<std::string> texts{"0", "1", "2"};
  CHECK(code_of([&] { remote_embed(texts, remote(short_stub.url("/embed"), 8)); }) == Errc::bad_response);
  CHECK(code_of([&] { remote_embed(texts, remote(short_stub.url("/embed"), 16)); }) == Errc::bad_response);

  oracle::HttpStub err_stub("/embed", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  CHECK(code_of([&] { remote_embed(texts, remote(err_stub.url("/embed"), 8)); }) == Errc::bad_response);

  oracle::HttpStub junk_stub("/embed", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json", "text/plain");
  });
  CHECK(code_of([&] { remote_embed(texts, remote(junk_stub.url("/embed"), 8)); }) == Errc::bad_response);
}

TEST_CASE("unreachable or slow endpoint times out") {
  const std::vector<std::string> texts{"0"};
  const auto port = oracle::closed_port();
  CHECK(code_of([&] { remote_embed(texts, remote("http://127.0.0.1:" + std::to_string(port) + "/embed", 8, 300)); }) ==
        Errc::timeout);

  oracle::HttpStub slow("/embed", [](const httplib::Request& req, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(800));
    one_hot(req, res, 8);
  });
  const auto start = std::chrono::steady_clock::now();
  CHECK(code_of([&] { remote_embed(texts, remote(slow.url("/embed"), 8, 200)); }) == Errc::timeout);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::milliseconds(790));
}
