#include <doctest.h>

#include <cmath>
#include <fstream>

#include "funnel/error.hpp"
#include "funnel/eval.hpp"
#include "support/oracles.hpp"

using namespace funnel;

namespace {

struct Bench {
  Corpus corpus;
  IndexSet index;
  Ontology ontology;
  VerbLexicon lexicon;
  QuerySet queries;
  Qrels qrels;
};

Bench load_bench(const std::filesystem::path& dir, const std::string& corpus_name) {
  auto corpus = load_corpus_file(dir / corpus_name).corpus;
  auto index = build_index(corpus);
  return {std::move(corpus), std::move(index), load_ontology(dir / "ontology.jsonl").ontology,
          load_verb_lexicon(dir / "lexicon.tsv"), {}, {}};
}

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  const auto dir = std::filesystem::temp_directory_path() / "funnel_test_eval";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::ofstream(path) << content;
  return path;
}

}  // namespace

TEST_CASE("ndcg for a single positive") {
  const std::map<std::string, int> rel{{"d1", 1}};
  const std::vector<std::string> first{"d1", "d2", "d3"};
  const std::vector<std::string> third{"d2", "d3", "d1"};
  const std::vector<std::string> absent{"d2", "d3"};
  CHECK(ndcg_at_k(first, rel) == 1.0);
  CHECK(ndcg_at_k(third, rel) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(ndcg_at_k(absent, rel) == 0.0);
  for (std::size_t r = 1; r <= 12; ++r) {
    std::vector<std::string> ranked;
    for (std::size_t i = 1; i < r; ++i) ranked.push_back("x" + std::to_string(i));
    ranked.push_back("d1");
    CHECK(ndcg_at_k(ranked, rel) == doctest::Approx(oracle::single_positive_ndcg(r, 10)).epsilon(1e-12));
  }
}

TEST_CASE("ndcg edge cases") {
  const std::vector<std::string> ranked{"a", "b"};
  CHECK_THROWS_WITH_AS(ndcg_at_k(ranked, {{"a", 0}}), doctest::Contains("NoPositives"), Error);
  CHECK_THROWS_AS(ndcg_at_k(ranked, {{"a", 1}}, 0), Error);
  const std::map<std::string, int> two{{"a", 1}, {"z", 1}};
  const double ideal = 1.0 + 1.0 / std::log2(3.0);
  CHECK(ndcg_at_k(ranked, two) == doctest::Approx(1.0 / ideal));
  CHECK(kNdcgCutoff == 10);
  CHECK(kRetrievalDepth == 1000);
}

TEST_CASE("expansion beats plain multi-field search on the bench") {
  auto b = load_bench(oracle::data_dir() / "bench", "corpus.jsonl");
  const auto bench = load_mldr_subset(oracle::bench("queries.tsv"), oracle::bench("corpus.jsonl"),
                                      oracle::bench("qrels.tsv"));
  CHECK(bench.missing_docs.empty());
  CHECK(bench.queries.size() == 20);
  const auto most = evaluate_run(b.index, bench.queries, bench.qrels, Strategy::most_fields, b.ontology, b.lexicon);
  const auto should =
      evaluate_run(b.index, bench.queries, bench.qrels, Strategy::should_expansion, b.ontology, b.lexicon);
  CHECK(most.evaluated == 20);
  CHECK(should.evaluated == 20);
  CHECK(should.ndcg_at_10 - most.ndcg_at_10 >= 0.15);
  CHECK(should.empty_result_rate == 0.0);

  const auto single =
      evaluate_run(b.index, bench.queries, bench.qrels, Strategy::should_expansion, b.ontology, b.lexicon, {1000, 10, 1, {}});
  CHECK(single.rankings == should.rankings);
  CHECK(single.ndcg_at_10 == should.ndcg_at_10);
}

TEST_CASE("must-expansion can return nothing where should-expansion cannot") {
  auto b = load_bench(oracle::data_dir() / "fixtures", "corpus.jsonl");
  const QuerySet queries{{"q1", "does warfarin prevent stroke"}, {"q2", "aspirin heart attack"}};
  const Qrels qrels{{"q1", {{"d8", 1}}}, {"q2", {{"d1", 1}}}};
  const auto must = evaluate_run(b.index, queries, qrels, Strategy::must_expansion, b.ontology, b.lexicon);
  const auto should = evaluate_run(b.index, queries, qrels, Strategy::should_expansion, b.ontology, b.lexicon);
  CHECK(must.queries[0].returned == 0);
  CHECK(must.queries[0].ndcg == 0.0);
  CHECK(must.empty_result_rate == 0.5);
  CHECK(should.empty_result_rate == 0.0);
  CHECK(should.queries[0].returned > 0);
  CHECK(should.ndcg_at_10 == 1.0);
  CHECK(should.queries[1].first_relevant_rank == 1u);
}

TEST_CASE("per-query failures are recorded, not fatal") {
  auto b = load_bench(oracle::data_dir() / "fixtures", "corpus.jsonl");
  const QuerySet queries{{"q1", "aspirin"}, {"q2", "stroke"}};
  const Qrels qrels{{"q1", {{"d1", 1}}}};
  const auto run = evaluate_run(b.index, queries, qrels, Strategy::most_fields, b.ontology, b.lexicon);
  CHECK(run.evaluated == 1);
  CHECK(run.query_count == 2);
  CHECK_FALSE(run.queries[1].ndcg.has_value());
  CHECK(run.queries[1].error.find("NoPositives") != std::string::npos);

  const auto report = run_report(run);
  std::istringstream lines(report);
  std::string line;
  std::vector<nlohmann::json> records;
  while (std::getline(lines, line)) records.push_back(nlohmann::json::parse(line));
  REQUIRE(records.size() == 3);
  CHECK(records[1].contains("error"));
  CHECK(records[2] == summary_record(run));
  CHECK(records[2].at("strategy") == "most-fields");
}

TEST_CASE("subset loader diagnostics") {
  const auto queries = write_temp("q.tsv", "q1\tfirst query\nq2\tsecond\n");
  const auto corpus = write_temp("c.jsonl", R"({"id":"a","title":"A","abstract":"x","sections":[]})"
                                            "\n");
  const auto qrels = write_temp("r.tsv", "q1\ta\t1\nq2\tmissing\t1\n");
  const auto subset = load_mldr_subset(queries, corpus, qrels);
  REQUIRE(subset.missing_docs.size() == 1);
  CHECK(subset.missing_docs[0].doc_id == "missing");
  CHECK(subset.missing_docs[0].line == 2);

  const auto truncated = write_temp("t.jsonl", R"({"id":"a","title":"A","abstract":"x","sections":[]})"
                                               "\n"
                                               R"({"id":"b","title":"B","abstract":"y","sections":[]})"
                                               "\n"
                                               R"({"id":"c","title":"C","abs)"
                                               "\n");
  try {
    load_mldr_subset(queries, truncated, qrels);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::parse_error);
    CHECK(e.line() == 3u);
  }

  const auto bad_grade = write_temp("g.tsv", "q1\ta\t1\nq1\tb\t7\n");
  try {
    load_qrels(bad_grade);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.line() == 2u);
  }
  CHECK_THROWS_AS(load_queries(write_temp("dup.tsv", "q1\ta\nq1\tb\n")), Error);
  CHECK_THROWS_AS(load_queries("/nonexistent/queries.tsv"), Error);
}

TEST_CASE("storage estimates") {
  const auto e = estimate_storage({10'000'000, 3, 1024, 4, 0});
  CHECK(e.dense_bytes == 122'880'000'000ULL);
  CHECK(e.sparse_bytes == 0);

  const auto m = estimate_storage({10'000'000, 0, 0, 0, 3200});
  CHECK(m.dense_bytes == 32'000'000'000ULL);
  CHECK(m.sparse_bytes == 32'000'000'000ULL);

  const auto zero = estimate_storage({0, 3, 1024, 4, 3200});
  CHECK(zero.dense_bytes == 0);
  CHECK(zero.sparse_bytes == 0);

  const StorageParams base{1000, 3, 768, 2, 500};
  const auto one = estimate_storage(base);
  for (std::uint64_t f : {2ULL, 7ULL, 1000ULL}) {
    auto p = base;
    p.doc_count *= f;
    const auto scaled = estimate_storage(p);
    CHECK(scaled.dense_bytes == f * one.dense_bytes);
    CHECK(scaled.sparse_bytes == f * one.sparse_bytes);
  }
  CHECK_THROWS_AS(estimate_storage({1ULL << 40, 1ULL << 20, 1ULL << 10, 4, 0}), Error);
}
