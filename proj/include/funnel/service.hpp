#pragma once

#include <cstddef>
#include <filesystem>
#include <future>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include <json.hpp>

#include "funnel/config.hpp"
#include "funnel/docqa.hpp"
#include "funnel/engine.hpp"
#include "funnel/error.hpp"

namespace httplib {
class Server;
}

namespace funnel {

enum class ApiCode { bad_request, not_found, conflict, upstream_failure, internal };

std::string_view to_string(ApiCode code);
int http_status(ApiCode code);
ApiCode classify(Errc code);

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// {code, message, detail}
ApiResponse api_error(ApiCode code, std::string message, std::string detail = {});

struct SessionState {
  std::string session_id;
  std::string corpus = "default";
  std::optional<std::string> doc_id;
  std::string last_query;
  std::optional<nlohmann::json> last_tree;
};

class SessionStore {
 public:
  SessionState get(const std::string& id) const;  // fresh state for unknown ids
  template <typename F>
  void update(const std::string& id, F&& f) {
    std::lock_guard lock(mutex_);
    auto [it, inserted] = sessions_.try_emplace(id);
    if (inserted) it->second.session_id = id;
    f(it->second);
  }

 private:
  mutable std::mutex mutex_;
  std::unordered_map<std::string, SessionState> sessions_;
};

/// Bounded ring of immutable traces. Evicted traces go to `spill_dir` when
/// one is configured and stay fetchable from there.
class TraceStore {
 public:
  explicit TraceStore(std::size_t capacity = 1000, std::filesystem::path spill_dir = {});

  /// Stamps each event with the store time and returns the new trace id.
  std::string put(const Trace& trace);
  std::optional<nlohmann::json> get(const std::string& id) const;
  std::size_t size() const;

 private:
  std::size_t capacity_;
  std::filesystem::path spill_dir_;
  mutable std::mutex mutex_;
  std::uint64_t next_ = 1;
  std::list<std::string> order_;
  std::unordered_map<std::string, nlohmann::json> traces_;
};

/// LRU of chunk indexes keyed by (doc_id, embedder key). Concurrent requests
/// for the same document share a single build.
class ChunkIndexCache {
 public:
  explicit ChunkIndexCache(std::size_t capacity = 32) : capacity_(capacity) {}

  std::shared_ptr<const ChunkIndex> get(const Document& doc, const Embedder& embedder,
                                        const ChunkPolicy& policy = {});
  std::size_t size() const;
  std::size_t builds() const;

 private:
  using Entry = std::shared_future<std::shared_ptr<const ChunkIndex>>;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::list<std::string> order_;
  struct Slot {
    Entry future;
    std::list<std::string>::iterator pos;
    std::size_t generation = 0;
  };
  std::unordered_map<std::string, Slot> entries_;
  std::size_t builds_ = 0;
};

class Service {
 public:
  Service(Resources resources, AppConfig config);
  ~Service();

  ApiResponse handle_search(const nlohmann::json& request);
  ApiResponse handle_expansion_preview(const nlohmann::json& request);
  ApiResponse handle_ask(const nlohmann::json& request);
  ApiResponse get_trace(const std::string& trace_id) const;
  ApiResponse get_document(const std::string& doc_id, const std::string& session = {});
  ApiResponse healthz() const;

  /// Routes one request; the HTTP server and tests both go through here.
  ApiResponse dispatch(std::string_view method, std::string_view path, std::string_view body,
                       const std::map<std::string, std::string>& params = {});

  SessionState session(const std::string& id) const { return sessions_.get(id); }
  const SearchEngine& engine() const noexcept { return engine_; }
  const ChunkIndexCache& chunk_cache() const noexcept { return cache_; }

  /// Binds the listener; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Requires bind().
  void run();
  void stop();

 private:
  ApiResponse guarded(const std::function<ApiResponse()>& f) const;

  Resources resources_;
  AppConfig config_;
  SearchEngine engine_;
  std::unique_ptr<Embedder> embedder_;
  std::unique_ptr<PairScorer> scorer_;
  SessionStore sessions_;
  TraceStore traces_;
  ChunkIndexCache cache_;
  std::unique_ptr<httplib::Server> server_;
};

/// Loads resources from `config` and serves until the process is stopped.
void serve(const AppConfig& config);

}  // namespace funnel
