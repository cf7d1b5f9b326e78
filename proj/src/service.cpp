#include "funnel/service.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <httplib.h>

#include "funnel/simd/kernels.hpp"
#include "funnel/text.hpp"

namespace funnel {

using nlohmann::json;

std::string_view to_string(ApiCode code) {
  switch (code) {
    case ApiCode::bad_request: return "bad_request";
    case ApiCode::not_found: return "not_found";
    case ApiCode::conflict: return "conflict";
    case ApiCode::upstream_failure: return "upstream_failure";
    case ApiCode::internal: return "internal";
  }
  return "internal";
}

int http_status(ApiCode code) {
  switch (code) {
    case ApiCode::bad_request: return 400;
    case ApiCode::not_found: return 404;
    case ApiCode::conflict: return 409;
    case ApiCode::upstream_failure: return 502;
    case ApiCode::internal: return 500;
  }
  return 500;
}

ApiCode classify(Errc code) {
  switch (code) {
    case Errc::empty_document:
    case Errc::parse_error:
    case Errc::empty_plan:
    case Errc::empty_query:
    case Errc::unknown_concept:
    case Errc::dimension_mismatch:
    case Errc::no_positives:
    case Errc::invalid_argument:
      return ApiCode::bad_request;
    case Errc::file_not_found:
    case Errc::not_found:
      return ApiCode::not_found;
    case Errc::duplicate_id:
      return ApiCode::conflict;
    case Errc::timeout:
    case Errc::bad_response:
    case Errc::embedding_failure:
    case Errc::scorer_failure:
      return ApiCode::upstream_failure;
  }
  return ApiCode::internal;
}

ApiResponse api_error(ApiCode code, std::string message, std::string detail) {
  json body = {{"code", to_string(code)}, {"message", std::move(message)}};
  if (!detail.empty()) body["detail"] = std::move(detail);
  return {http_status(code), std::move(body)};
}

SessionState SessionStore::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
  SessionState fresh;
  fresh.session_id = id;
  return fresh;
}

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms << 'Z';
  return out.str();
}

}  // namespace

TraceStore::TraceStore(std::size_t capacity, std::filesystem::path spill_dir)
    : capacity_(std::max<std::size_t>(capacity, 1)), spill_dir_(std::move(spill_dir)) {
  if (!spill_dir_.empty()) std::filesystem::create_directories(spill_dir_);
}

std::string TraceStore::put(const Trace& trace) {
  const auto stamp = utc_timestamp();
  json events = json::array();
  for (const auto& e : trace.events()) {
    auto j = to_json(e);
    j["timestamp"] = stamp;
    events.push_back(std::move(j));
  }

  std::lock_guard lock(mutex_);
  std::ostringstream id;
  id << "t" << std::setw(8) << std::setfill('0') << next_++;
  json stored = {{"trace_id", id.str()}, {"events", std::move(events)}};
  traces_.emplace(id.str(), std::move(stored));
  order_.push_back(id.str());
  while (order_.size() > capacity_) {
    const auto victim = order_.front();
    order_.pop_front();
    if (!spill_dir_.empty()) {
      std::ofstream out(spill_dir_ / (victim + ".json"));
      out << traces_.at(victim).dump() << '\n';
    }
    traces_.erase(victim);
  }
  return id.str();
}

std::optional<json> TraceStore::get(const std::string& id) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = traces_.find(id); it != traces_.end()) return it->second;
  }
  if (spill_dir_.empty() || id.find_first_of("/\\.") != std::string::npos || id.empty()) return std::nullopt;
  std::ifstream in(spill_dir_ / (id + ".json"));
  if (!in) return std::nullopt;
  try {
    return json::parse(in);
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

std::size_t TraceStore::size() const {
  std::lock_guard lock(mutex_);
  return traces_.size();
}

std::shared_ptr<const ChunkIndex> ChunkIndexCache::get(const Document& doc, const Embedder& embedder,
                                                       const ChunkPolicy& policy) {
  const std::string key = doc.id + '\x1f' + embedder.key();
  std::promise<std::shared_ptr<const ChunkIndex>> promise;
  Entry entry;
  bool owner = false;
  std::size_t generation = 0;
  {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) {
      order_.splice(order_.begin(), order_, it->second.pos);
      entry = it->second.future;
    } else {
      owner = true;
      entry = promise.get_future().share();
      order_.push_front(key);
      generation = ++builds_;
      entries_.emplace(key, Slot{entry, order_.begin(), generation});
      while (entries_.size() > capacity_) {
        entries_.erase(order_.back());
        order_.pop_back();
      }
    }
  }
  if (owner) {
    try {
      promise.set_value(std::make_shared<const ChunkIndex>(doc, embedder, policy));
    } catch (...) {
      promise.set_exception(std::current_exception());
      std::lock_guard lock(mutex_);
      if (auto it = entries_.find(key); it != entries_.end() && it->second.generation == generation) {
        order_.erase(it->second.pos);
        entries_.erase(it);
      }
    }
  }
  return entry.get();
}

std::size_t ChunkIndexCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::size_t ChunkIndexCache::builds() const {
  std::lock_guard lock(mutex_);
  return builds_;
}

namespace {

std::string require_string(const json& request, const char* key, bool required = true) {
  auto it = request.find(key);
  if (it == request.end() || it->is_null()) {
    if (required) throw Error(Errc::invalid_argument, std::string("missing field '") + key + "'");
    return {};
  }
  if (!it->is_string()) throw Error(Errc::invalid_argument, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::string snippet_of(const Document& doc) {
  constexpr std::size_t kSnippetLength = 200;
  std::string_view source = doc.abstract;
  if (trim(source).empty() && !doc.sections.empty()) source = doc.sections.front().text;
  if (trim(source).empty()) source = doc.title;
  return std::string(utf8_prefix(trim(source), kSnippetLength));
}

}  // namespace

Service::Service(Resources resources, AppConfig config)
    : resources_(std::move(resources)),
      config_(std::move(config)),
      engine_(resources_),
      embedder_(make_embedder(config_.embedder)),
      scorer_(make_scorer(config_.scorer)),
      traces_(config_.trace_capacity, config_.trace_spill_dir),
      cache_(config_.chunk_cache_capacity) {}

Service::~Service() { stop(); }

ApiResponse Service::guarded(const std::function<ApiResponse()>& f) const {
  try {
    return f();
  } catch (const Error& e) {
    return api_error(classify(e.code()), std::string(funnel::to_string(e.code())), e.detail());
  } catch (const json::exception& e) {
    return api_error(ApiCode::bad_request, "malformed request", e.what());
  } catch (const std::exception& e) {
    return api_error(ApiCode::internal, "internal error", e.what());
  }
}

ApiResponse Service::handle_search(const json& request) {
  return guarded([&] {
    if (!request.is_object()) throw Error(Errc::invalid_argument, "request must be an object");
    SearchRequest req;
    req.query = require_string(request, "query", false);
    if (auto s = request.find("strategy"); s != request.end() && !s->is_null()) {
      req.strategy = parse_strategy(s->get<std::string>());
    }
    if (auto k = request.find("k"); k != request.end() && !k->is_null()) {
      if (!k->is_number_integer() || k->get<long long>() < 1) throw Error(Errc::invalid_argument, "k must be >= 1");
      req.k = k->get<std::size_t>();
    }
    if (auto o = request.find("override"); o != request.end() && !o->is_null()) {
      req.override_plan = plan_from_json(*o);
    } else if (trim(req.query).empty()) {
      throw Error(Errc::empty_query, "query is empty");
    }

    auto outcome = engine_.search(req);
    const auto trace_id = traces_.put(outcome.trace);

    json results = json::array();
    for (const auto& r : outcome.results) {
      json item = {{"rank", r.rank}, {"doc_id", r.doc_id}, {"score", r.score}};
      const Document* doc = resources_.corpus ? resources_.corpus->find(r.doc_id) : nullptr;
      const auto ord = engine_.index().ordinal(r.doc_id);
      item["title"] = doc ? doc->title : (ord ? engine_.index().title(*ord) : std::string());
      item["snippet"] = doc ? snippet_of(*doc) : std::string();
      results.push_back(std::move(item));
    }

    if (const auto session = require_string(request, "session", false); !session.empty()) {
      sessions_.update(session, [&](SessionState& s) {
        s.last_query = req.query;
        if (req.override_plan) s.last_tree = to_json(*req.override_plan);
      });
    }
    return ApiResponse{200, {{"results", std::move(results)},
                             {"trace_id", trace_id},
                             {"strategy", funnel::to_string(req.strategy)},
                             {"plan", to_json(outcome.plan)}}};
  });
}

ApiResponse Service::handle_expansion_preview(const json& request) {
  return guarded([&] {
    if (!request.is_object()) throw Error(Errc::invalid_argument, "request must be an object");
    const auto query = require_string(request, "query");
    Strategy strategy = Strategy::should_expansion;
    if (auto s = request.find("strategy"); s != request.end() && !s->is_null()) {
      strategy = parse_strategy(s->get<std::string>());
    }
    const auto built = engine_.preview(query, strategy);
    json mentions = json::array();
    for (const auto& m : built.mentions) mentions.push_back(to_json(m));
    json expansions = json::array();
    for (const auto& e : built.expansions) expansions.push_back(to_json(e));
    const auto& o = engine_.options();
    return ApiResponse{200, {{"query", query},
                             {"strategy", funnel::to_string(strategy)},
                             {"mentions", std::move(mentions)},
                             {"expansions", std::move(expansions)},
                             {"boosts", {{"entity", o.entity_boost}, {"verb", o.verb_boost}, {"residual", o.residual_boost}}},
                             {"tree", to_json(built.plan)}}};
  });
}

ApiResponse Service::handle_ask(const json& request) {
  return guarded([&] {
    if (!request.is_object()) throw Error(Errc::invalid_argument, "request must be an object");
    const auto session = require_string(request, "session", false);
    auto doc_id = require_string(request, "doc_id", false);
    if (doc_id.empty() && !session.empty()) doc_id = sessions_.get(session).doc_id.value_or("");
    if (doc_id.empty()) return api_error(ApiCode::bad_request, "no document selected", "select a document first");
    const auto question = require_string(request, "question");
    if (trim(question).empty()) throw Error(Errc::empty_query, "question is empty");
    AskOutput output = AskOutput::all;
    if (auto o = request.find("output"); o != request.end() && !o->is_null()) {
      output = parse_ask_output(o->get<std::string>());
    }
    if (!resources_.corpus) return api_error(ApiCode::not_found, "corpus not loaded");
    const Document* doc = resources_.corpus->find(doc_id);
    if (doc == nullptr) return api_error(ApiCode::not_found, "unknown document", doc_id);

    const auto index = cache_.get(*doc, *embedder_);
    PipelineProviders providers;
    providers.scorer = scorer_.get();
    auto bundle = answer_question(*index, question, *embedder_, output, config_.pipeline, providers);
    const auto trace_id = traces_.put(bundle.trace);
    if (!session.empty()) sessions_.update(session, [&](SessionState& s) { s.doc_id = doc_id; });

    auto body = to_json(bundle);
    body["trace_id"] = trace_id;
    return ApiResponse{200, std::move(body)};
  });
}

ApiResponse Service::get_trace(const std::string& trace_id) const {
  auto trace = traces_.get(trace_id);
  if (!trace) return api_error(ApiCode::not_found, "unknown trace", trace_id);
  return {200, std::move(*trace)};
}

ApiResponse Service::get_document(const std::string& doc_id, const std::string& session) {
  if (!resources_.corpus) return api_error(ApiCode::not_found, "corpus not loaded");
  const Document* doc = resources_.corpus->find(doc_id);
  if (doc == nullptr) return api_error(ApiCode::not_found, "unknown document", doc_id);
  if (!session.empty()) sessions_.update(session, [&](SessionState& s) { s.doc_id = doc_id; });
  return {200, to_json(*doc)};
}

ApiResponse Service::healthz() const {
  return {200, {{"status", "ok"},
                {"documents", resources_.corpus ? resources_.corpus->size() : 0},
                {"indexed_documents", engine_.index().doc_ids().size()},
                {"concepts", engine_.ontology().size()},
                {"traces", traces_.size()},
                {"embedder", embedder_->key()},
                {"scorer", scorer_->name()},
                {"simd", std::string(simd::to_string(simd::kernels().isa))}}};
}

ApiResponse Service::dispatch(std::string_view method, std::string_view path, std::string_view body,
                              const std::map<std::string, std::string>& params) {
  auto parse_body = [&]() -> std::optional<json> {
    try {
      return json::parse(body.empty() ? std::string_view("{}") : body);
    } catch (const json::exception&) {
      return std::nullopt;
    }
  };
  auto param = [&](const char* key) {
    auto it = params.find(key);
    return it == params.end() ? std::string() : it->second;
  };

  if (method == "POST" && (path == "/search" || path == "/expansion/preview" || path == "/ask")) {
    auto request = parse_body();
    if (!request) return api_error(ApiCode::bad_request, "request body is not valid JSON");
    if (path == "/search") return handle_search(*request);
    if (path == "/ask") return handle_ask(*request);
    return handle_expansion_preview(*request);
  }
  if (method == "GET") {
    if (path == "/healthz") return healthz();
    constexpr std::string_view trace_prefix = "/trace/";
    constexpr std::string_view doc_prefix = "/documents/";
    if (path.starts_with(trace_prefix) && path.size() > trace_prefix.size()) {
      return get_trace(std::string(path.substr(trace_prefix.size())));
    }
    if (path.starts_with(doc_prefix) && path.size() > doc_prefix.size()) {
      return get_document(httplib::detail::decode_url(std::string(path.substr(doc_prefix.size())), false),
                          param("session"));
    }
  }
  return api_error(ApiCode::not_found, "no such endpoint", std::string(method) + " " + std::string(path));
}

int Service::bind(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> params;
    for (const auto& [k, v] : req.params) params.emplace(k, v);
    auto out = dispatch(req.method, req.path, req.body, params);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json; charset=utf-8");
  };
  server_->Get(".*", handler);
  server_->Post(".*", handler);
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error(Errc::invalid_argument, "cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    throw Error(Errc::invalid_argument, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void Service::run() {
  if (!server_) throw Error(Errc::invalid_argument, "bind() first");
  server_->listen_after_bind();
}

void Service::stop() {
  if (server_) server_->stop();
}

void serve(const AppConfig& config) {
  auto resources = load_resources(config);
  for (const auto& e : resources.corpus_errors) std::cerr << "corpus: " << e.what() << '\n';
  for (const auto& w : resources.ontology_warnings) {
    std::cerr << "ontology line " << w.line << ": " << w.concept_id << " " << w.relation << " -> missing "
              << w.missing_id << '\n';
  }
  Service service(std::move(resources), config);
  const int port = service.bind(config.host, config.port);
  std::cerr << "listening on " << config.host << ':' << port << '\n';
  service.run();
}

}  // namespace funnel
