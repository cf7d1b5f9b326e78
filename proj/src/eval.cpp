#include "funnel/eval.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "funnel/error.hpp"
#include "funnel/text.hpp"

namespace funnel {

using nlohmann::json;

double ndcg_at_k(std::span<const std::string> ranked_doc_ids, const std::map<std::string, int>& relevant,
                 std::size_t k) {
  if (k == 0) throw Error(Errc::invalid_argument, "k must be >= 1");
  std::size_t positives = 0;
  for (const auto& [_, grade] : relevant) positives += grade > 0 ? 1 : 0;
  if (positives == 0) throw Error(Errc::no_positives, "query has no relevant document");

  double dcg = 0.0;
  const std::size_t depth = std::min(k, ranked_doc_ids.size());
  for (std::size_t i = 0; i < depth; ++i) {
    auto it = relevant.find(ranked_doc_ids[i]);
    if (it != relevant.end() && it->second > 0) dcg += 1.0 / std::log2(static_cast<double>(i + 2));
  }
  double ideal = 0.0;
  for (std::size_t i = 0; i < std::min(k, positives); ++i) ideal += 1.0 / std::log2(static_cast<double>(i + 2));
  return dcg / ideal;
}

namespace {

QueryDiagnostics evaluate_query(const IndexSet& index, const QueryRecord& q, const Qrels& qrels, Strategy strategy,
                                const Ontology& ontology, const VerbLexicon& lexicon, const EvalConfig& config,
                                std::vector<std::string>& ranking) {
  QueryDiagnostics d;
  d.query_id = q.query_id;
  try {
    const auto plan = build_query_plan(q.text, strategy, ontology, lexicon, nullptr, config.plan);
    const auto retrieval = execute_query_plan(plan.plan, index, config.depth);
    for (const auto& r : retrieval.results) ranking.push_back(r.doc_id);
    d.returned = ranking.size();
    for (std::size_t i = 0; i < ranking.size() && i < config.cutoff; ++i) d.top_doc_ids.push_back(ranking[i]);

    auto rel = qrels.find(q.query_id);
    static const std::map<std::string, int> none;
    const auto& judged = rel == qrels.end() ? none : rel->second;
    d.ndcg = ndcg_at_k(ranking, judged, config.cutoff);
    for (std::size_t i = 0; i < ranking.size(); ++i) {
      auto it = judged.find(ranking[i]);
      if (it != judged.end() && it->second > 0) {
        d.first_relevant_rank = i + 1;
        break;
      }
    }
  } catch (const Error& e) {
    d.ndcg.reset();
    d.error = e.what();
  }
  return d;
}

}  // namespace

RunResult evaluate_run(const IndexSet& index, const QuerySet& queries, const Qrels& qrels, Strategy strategy,
                       const Ontology& ontology, const VerbLexicon& lexicon, const EvalConfig& config) {
  RunResult run;
  run.strategy = strategy;
  run.query_count = queries.size();
  run.queries.resize(queries.size());
  run.rankings.resize(queries.size());

  std::size_t threads = config.threads != 0 ? config.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(queries.size(), 1));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < queries.size(); i = next++) {
      run.queries[i] = evaluate_query(index, queries[i], qrels, strategy, ontology, lexicon, config, run.rankings[i]);
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
  }

  double sum = 0.0;
  std::size_t empty = 0;
  for (const auto& d : run.queries) {
    if (!d.ndcg) continue;
    ++run.evaluated;
    sum += *d.ndcg;
    empty += d.returned == 0 ? 1 : 0;
  }
  if (run.evaluated > 0) {
    run.ndcg_at_10 = sum / static_cast<double>(run.evaluated);
    run.empty_result_rate = static_cast<double>(empty) / static_cast<double>(run.evaluated);
  }
  return run;
}

json summary_record(const RunResult& run) {
  return {{"strategy", to_string(run.strategy)},
          {"ndcg_at_10", run.ndcg_at_10},
          {"empty_result_rate", run.empty_result_rate},
          {"query_count", run.query_count},
          {"evaluated", run.evaluated}};
}

std::string run_report(const RunResult& run) {
  std::ostringstream out;
  for (const auto& d : run.queries) {
    json rec = {{"query_id", d.query_id},
                {"returned", d.returned},
                {"ndcg_at_10", d.ndcg ? json(*d.ndcg) : json(nullptr)},
                {"first_relevant_rank", d.first_relevant_rank ? json(*d.first_relevant_rank) : json(nullptr)},
                {"top", d.top_doc_ids}};
    if (!d.error.empty()) rec["error"] = d.error;
    out << rec.dump() << '\n';
  }
  out << summary_record(run).dump() << '\n';
  return out.str();
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    const auto tab = line.find('\t');
    out.push_back(line.substr(0, tab));
    if (tab == std::string_view::npos) break;
    line.remove_prefix(tab + 1);
  }
  return out;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

QuerySet load_queries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::file_not_found, path.string());
  QuerySet out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(std::move(line));
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw Error(Errc::parse_error, "expected query_id<TAB>text", line_no);
    QueryRecord q{line.substr(0, tab), line.substr(tab + 1)};
    if (!ids.insert(q.query_id).second) throw Error(Errc::parse_error, "duplicate query id " + q.query_id, line_no);
    out.push_back(std::move(q));
  }
  return out;
}

Qrels load_qrels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::file_not_found, path.string());
  Qrels out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(std::move(line));
    if (trim(line).empty()) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 3 || cols[0].empty() || cols[1].empty()) {
      throw Error(Errc::parse_error, "expected query_id<TAB>doc_id<TAB>grade", line_no);
    }
    const auto grade_text = trim(cols[2]);
    int grade = -1;
    auto [ptr, ec] = std::from_chars(grade_text.data(), grade_text.data() + grade_text.size(), grade);
    if (ec != std::errc{} || ptr != grade_text.data() + grade_text.size() || (grade != 0 && grade != 1)) {
      throw Error(Errc::parse_error, "grade must be 0 or 1", line_no);
    }
    out[std::string(cols[0])][std::string(cols[1])] = grade;
  }
  return out;
}

MldrSubset load_mldr_subset(const std::filesystem::path& queries, const std::filesystem::path& corpus,
                            const std::filesystem::path& qrels) {
  MldrSubset out;
  out.queries = load_queries(queries);
  auto loaded = load_corpus_file(corpus);
  if (!loaded.errors.empty()) {
    const auto& first = loaded.errors.front();
    throw Error(Errc::parse_error, corpus.string() + ": " + first.detail(), first.line());
  }
  out.corpus = std::move(loaded.corpus);
  out.qrels = load_qrels(qrels);

  // Line numbers for the warnings come from a second pass over the qrels file.
  std::ifstream in(qrels);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(std::move(line));
    if (trim(line).empty()) continue;
    const auto cols = split_tabs(line);
    if (out.corpus.find(cols[1]) == nullptr) {
      out.missing_docs.push_back({std::string(cols[0]), std::string(cols[1]), line_no});
    }
  }
  return out;
}

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    throw Error(Errc::invalid_argument, "storage estimate overflows 64 bits");
  }
  return a * b;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  if (b > std::numeric_limits<std::uint64_t>::max() - a) {
    throw Error(Errc::invalid_argument, "storage estimate overflows 64 bits");
  }
  return a + b;
}

}  // namespace

StorageEstimate estimate_storage(const StorageParams& p) {
  const std::uint64_t tokens = checked_mul(p.doc_count, p.avg_token_bytes_per_doc);
  const std::uint64_t vectors =
      checked_mul(checked_mul(checked_mul(p.doc_count, p.chunks_per_doc), p.embedding_dim), p.bytes_per_dim);
  return {checked_add(vectors, tokens), tokens};
}

}  // namespace funnel
