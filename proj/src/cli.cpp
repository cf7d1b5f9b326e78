#include "funnel/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>

#include "funnel/config.hpp"
#include "funnel/engine.hpp"
#include "funnel/error.hpp"
#include "funnel/eval.hpp"
#include "funnel/index_io.hpp"
#include "funnel/service.hpp"
#include "funnel/text.hpp"

namespace funnel::cli {

using nlohmann::json;

namespace {

struct Common {
  std::string config_path;
  std::string format = "lines";
  std::string corpus;
  std::string index;
  std::string ontology;
  std::string lexicon;
};

AppConfig resolve_config(const Common& c) {
  AppConfig config = c.config_path.empty() ? AppConfig{} : load_config(c.config_path);
  apply_env_overrides(config);
  if (!c.corpus.empty()) config.corpus = c.corpus;
  if (!c.index.empty()) config.index = c.index;
  if (!c.ontology.empty()) config.ontology = c.ontology;
  if (!c.lexicon.empty()) config.lexicon = c.lexicon;
  return config;
}

std::string format_score(double score) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", score);
  return buf;
}

void report_load_warnings(const Resources& r, std::ostream& err) {
  for (const auto& e : r.corpus_errors) err << "corpus: " << e.what() << '\n';
  for (const auto& w : r.ontology_warnings) {
    err << "ontology line " << w.line << ": " << w.concept_id << ' ' << w.relation << " -> missing " << w.missing_id
        << '\n';
  }
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::timeout:
    case Errc::bad_response:
    case Errc::embedding_failure:
    case Errc::scorer_failure:
      return upstream;
    case Errc::invalid_argument:
      return usage;
    default:
      return data;
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::file_not_found, path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, path + ": " + e.what());
  }
}

std::string human_bytes(std::uint64_t bytes) {
  static const char* units[] = {"B", "KB", "MB", "GB", "TB", "PB", "EB"};
  double v = static_cast<double>(bytes);
  std::size_t u = 0;
  while (v >= 1000.0 && u + 1 < std::size(units)) {
    v /= 1000.0;
    ++u;
  }
  std::ostringstream s;
  s << std::setprecision(4) << v << ' ' << units[u];
  return s.str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"funnel: expanded BM25 corpus search and in-document question answering"};
  app.name("funnel");
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--format", common.format, "Output format")->check(CLI::IsMember({"lines", "pretty"}));
    sub->add_option("--corpus", common.corpus, "Corpus JSONL file");
    sub->add_option("--index", common.index, "Saved index file");
    sub->add_option("--ontology", common.ontology, "Ontology JSONL file");
    sub->add_option("--lexicon", common.lexicon, "Verb lexicon TSV file");
  };
  const std::vector<std::string> strategies = {"most-fields", "must-expansion", "should-expansion"};

  auto* index_cmd = app.add_subcommand("index", "Build and save a fielded BM25 index");
  add_common(index_cmd);
  std::string index_out;
  index_cmd->add_option("--out", index_out, "Output index file")->required();

  auto* search_cmd = app.add_subcommand("search", "Rank corpus documents for a query");
  add_common(search_cmd);
  std::string query;
  std::string strategy = "should-expansion";
  std::size_t k = 10;
  std::string plan_file;
  search_cmd->add_option("--query", query, "Query text");
  search_cmd->add_option("--strategy", strategy)->check(CLI::IsMember(strategies));
  search_cmd->add_option("--k", k, "Result count")->check(CLI::PositiveNumber);
  search_cmd->add_option("--plan", plan_file, "Execute this clause tree (JSON) instead of expanding the query");

  auto* expand_cmd = app.add_subcommand("expand", "Show the expanded clause tree for a query");
  add_common(expand_cmd);
  expand_cmd->add_option("--query", query, "Query text")->required();
  expand_cmd->add_option("--strategy", strategy)->check(CLI::IsMember(strategies));

  auto* ask_cmd = app.add_subcommand("ask", "Answer a question inside one document");
  add_common(ask_cmd);
  std::string doc_id;
  std::string question;
  std::string output = "all";
  ask_cmd->add_option("--doc", doc_id, "Document id")->required();
  ask_cmd->add_option("--question", question, "Question text")->required();
  ask_cmd->add_option("--output", output)->check(CLI::IsMember({"extractive", "chain", "packed", "all"}));

  auto* eval_cmd = app.add_subcommand("eval", "nDCG@10 and empty-result rate per strategy");
  add_common(eval_cmd);
  std::string queries_path;
  std::string qrels_path;
  std::vector<std::string> eval_strategies;
  std::size_t depth = kRetrievalDepth;
  std::size_t threads = 0;
  std::string report_path;
  eval_cmd->add_option("--queries", queries_path, "queries TSV (query_id<TAB>text)")->required();
  eval_cmd->add_option("--qrels", qrels_path, "qrels TSV (query_id<TAB>doc_id<TAB>grade)")->required();
  eval_cmd->add_option("--strategy", eval_strategies, "Strategy (repeatable; default all)")
      ->check(CLI::IsMember(strategies));
  eval_cmd->add_option("--depth", depth, "Retrieval depth")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--threads", threads, "Worker threads (0 = hardware)");
  eval_cmd->add_option("--report", report_path, "Write per-query diagnostics here");

  auto* storage_cmd = app.add_subcommand("estimate-storage", "Dense and sparse index size in bytes");
  std::string storage_format = "lines";
  StorageParams storage;
  storage_cmd->add_option("--docs", storage.doc_count)->required();
  storage_cmd->add_option("--chunks", storage.chunks_per_doc)->required();
  storage_cmd->add_option("--dims", storage.embedding_dim)->required();
  storage_cmd->add_option("--bytes-per-dim", storage.bytes_per_dim)->required();
  storage_cmd->add_option("--token-bytes", storage.avg_token_bytes_per_doc, "Average token bytes per document");
  storage_cmd->add_option("--format", storage_format)->check(CLI::IsMember({"lines", "pretty"}));

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  add_common(serve_cmd);
  std::string host;
  int port = -1;
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port)->check(CLI::Range(0, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    const auto* target = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    out << target->help();
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto* failed = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << failed->help();
    return usage;
  }

  const bool pretty = common.format == "pretty";
  try {
    if (storage_cmd->parsed()) {
      const auto est = estimate_storage(storage);
      if (storage_format == "pretty") {
        out << "dense   " << est.dense_bytes << " bytes (" << human_bytes(est.dense_bytes) << ")\n";
        out << "sparse  " << est.sparse_bytes << " bytes (" << human_bytes(est.sparse_bytes) << ")\n";
      } else {
        out << "dense_bytes\t" << est.dense_bytes << '\n' << "sparse_bytes\t" << est.sparse_bytes << '\n';
      }
      return ok;
    }

    const AppConfig config = resolve_config(common);

    if (serve_cmd->parsed()) {
      AppConfig c = config;
      if (!host.empty()) c.host = host;
      if (port >= 0) c.port = port;
      serve(c);
      return ok;
    }

    if (index_cmd->parsed()) {
      if (config.corpus.empty()) throw Error(Errc::invalid_argument, "--corpus is required");
      auto loaded = load_corpus_file(config.corpus);
      for (const auto& e : loaded.errors) err << "corpus: " << e.what() << '\n';
      const auto index = build_index(loaded.corpus);
      save_index(index, index_out);
      if (pretty) {
        out << "indexed " << index.doc_count() << " documents into " << index_out << " (" << loaded.errors.size()
            << " rejected lines)\n";
      } else {
        out << "documents\t" << index.doc_count() << '\n' << "rejected\t" << loaded.errors.size() << '\n';
      }
      return ok;
    }

    if (ask_cmd->parsed()) {
      if (config.corpus.empty()) throw Error(Errc::invalid_argument, "--corpus is required");
      auto loaded = load_corpus_file(config.corpus);
      for (const auto& e : loaded.errors) err << "corpus: " << e.what() << '\n';
      const Document* doc = loaded.corpus.find(doc_id);
      if (doc == nullptr) throw Error(Errc::not_found, "unknown document " + doc_id);
      const auto embedder = make_embedder(config.embedder);
      const auto scorer = make_scorer(config.scorer);
      const ChunkIndex index(*doc, *embedder);
      PipelineProviders providers;
      providers.scorer = scorer.get();
      const auto bundle =
          answer_question(index, question, *embedder, parse_ask_output(output), config.pipeline, providers);
      if (!pretty) {
        out << to_json(bundle).dump() << '\n';
        return ok;
      }
      out << "question: " << bundle.question << "\ndocument: " << bundle.doc_id << "\n";
      if (!bundle.passages.empty()) {
        out << "\npassages:\n";
        for (const auto& p : bundle.passages) {
          out << "  " << p.rank << ". [chunk " << p.chunk_id << " " << p.begin << "-" << p.end << "] "
              << format_score(p.score) << "  " << p.text << '\n';
        }
      }
      if (!bundle.chain.empty()) {
        out << "\nreasoning chain:\n";
        for (const auto& step : bundle.chain) {
          out << "  hop " << step.hop << '\n';
          for (const auto& e : step.evidence) {
            out << "    chunk " << e.chunk_id << " (" << format_score(e.score) << "): " << e.excerpt << '\n';
          }
        }
      }
      if (!bundle.context.items.empty()) {
        out << "\ncontext (" << bundle.context.total_tokens << "/" << bundle.context.budget << " tokens):";
        for (const auto& item : bundle.context.items) out << ' ' << item.chunk_id;
        out << '\n';
      }
      if (!bundle.draft.empty()) out << "\nanswer: " << bundle.draft << '\n';
      return ok;
    }

    // search, expand and eval share the corpus-level engine.
    const auto resources = load_resources(config);
    report_load_warnings(resources, err);
    const SearchEngine engine(resources);

    if (expand_cmd->parsed()) {
      const auto built = engine.preview(query, parse_strategy(strategy));
      json mentions = json::array();
      for (const auto& m : built.mentions) mentions.push_back(to_json(m));
      json expansions = json::array();
      for (const auto& e : built.expansions) expansions.push_back(to_json(e));
      const json body = {{"query", query},
                         {"strategy", strategy},
                         {"mentions", mentions},
                         {"expansions", expansions},
                         {"tree", to_json(built.plan)}};
      out << (pretty ? body.dump(2) : body.dump()) << '\n';
      return ok;
    }

    if (search_cmd->parsed()) {
      SearchRequest req;
      req.query = query;
      req.strategy = parse_strategy(strategy);
      req.k = k;
      if (!plan_file.empty()) {
        req.override_plan = plan_from_json(read_json_file(plan_file));
      } else if (trim(query).empty()) {
        throw Error(Errc::invalid_argument, "--query is required");
      }
      const auto outcome = engine.search(req);
      for (const auto& r : outcome.results) {
        if (pretty) {
          const auto ord = engine.index().ordinal(r.doc_id);
          out << std::setw(4) << r.rank << "  " << format_score(r.score) << "  " << r.doc_id << "  "
              << (ord ? engine.index().title(*ord) : std::string()) << '\n';
        } else {
          out << r.rank << '\t' << r.doc_id << '\t' << format_score(r.score) << '\n';
        }
      }
      if (pretty && outcome.results.empty()) out << "no results\n";
      return ok;
    }

    if (eval_cmd->parsed()) {
      if (!resources.corpus_errors.empty()) throw resources.corpus_errors.front();
      const auto queries = load_queries(queries_path);
      const auto qrels = load_qrels(qrels_path);
      if (eval_strategies.empty()) eval_strategies = strategies;
      EvalConfig ec;
      ec.depth = depth;
      ec.threads = threads;
      std::ofstream report;
      if (!report_path.empty()) {
        report.open(report_path);
        if (!report) throw Error(Errc::file_not_found, report_path);
      }
      for (const auto& s : eval_strategies) {
        const auto run = evaluate_run(engine.index(), queries, qrels, parse_strategy(s), engine.ontology(),
                                      *resources.lexicon, ec);
        if (report) report << run_report(run);
        if (pretty) {
          out << std::left << std::setw(18) << s << " nDCG@10 " << std::fixed << std::setprecision(4)
              << run.ndcg_at_10 << "  empty " << run.empty_result_rate << "  (" << run.evaluated << "/"
              << run.query_count << " queries)\n";
          out.unsetf(std::ios::floatfield);
        } else {
          out << summary_record(run).dump() << '\n';
        }
      }
      return ok;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return data;
  }
  return usage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"funnel"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace funnel::cli
