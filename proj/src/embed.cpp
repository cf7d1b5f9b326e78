#include "funnel/embed.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include <httplib.h>
#include <json.hpp>

#include "funnel/error.hpp"
#include "funnel/simd/kernels.hpp"
#include "funnel/text.hpp"

namespace funnel {

void EmbedderConfig::validate() const {
  if (dimension < 8) throw Error(Errc::invalid_argument, "embedding dimension must be >= 8");
  if (kind == EmbedderKind::remote) {
    if (endpoint.empty()) throw Error(Errc::invalid_argument, "remote embedder needs an endpoint");
    if (batch_size == 0 || max_in_flight == 0) throw Error(Errc::invalid_argument, "batch_size and max_in_flight must be >= 1");
  }
}

std::string EmbedderConfig::key() const {
  if (kind == EmbedderKind::reference) {
    return "reference:d=" + std::to_string(dimension) + ":seed=" + std::to_string(seed);
  }
  return "remote:" + endpoint + ":d=" + std::to_string(dimension);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = 14695981039346656037ULL ^ seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

EmbeddingVector normalized(std::vector<double> values) {
  double sq = 0.0;
  for (double v : values) sq += v * v;
  EmbeddingVector out;
  out.values.assign(values.size(), 0.0F);
  if (sq == 0.0) {
    out.zero = true;
    return out;
  }
  const double norm = std::sqrt(sq);
  for (std::size_t i = 0; i < values.size(); ++i) out.values[i] = static_cast<float>(values[i] / norm);
  return out;
}

EmbeddingVector embed_text(std::string_view text, const EmbedderConfig& config) {
  config.validate();
  const std::uint64_t d = config.dimension;
  std::vector<double> acc(d, 0.0);
  for (const auto& token : analyze(text, AnalyzerConfig::standard_english())) {
    const std::uint64_t h = fnv1a64(token, config.seed);
    acc[h % d] += ((h / d) & 1U) != 0 ? -1.0 : 1.0;
  }
  return normalized(std::move(acc));
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension()) {
    throw Error(Errc::dimension_mismatch,
                std::to_string(a.dimension()) + " vs " + std::to_string(b.dimension()));
  }
  if (a.zero || b.zero) return 0.0;
  const auto& k = simd::kernels();
  const double ab = k.dot(a.values.data(), b.values.data(), a.dimension());
  const double aa = k.dot(a.values.data(), a.values.data(), a.dimension());
  const double bb = k.dot(b.values.data(), b.values.data(), b.dimension());
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

std::pair<std::string, std::string> split_endpoint(std::string_view endpoint) {
  const auto scheme = endpoint.find("://");
  const auto host_start = scheme == std::string_view::npos ? 0 : scheme + 3;
  const auto slash = endpoint.find('/', host_start);
  if (slash == std::string_view::npos) return {std::string(endpoint), "/"};
  return {std::string(endpoint.substr(0, slash)), std::string(endpoint.substr(slash))};
}

namespace {

std::vector<EmbeddingVector> post_batch(std::span<const std::string> texts, const EmbedderConfig& config) {
  const auto [base, path] = split_endpoint(config.endpoint);
  httplib::Client client(base);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  nlohmann::json body = {{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) {
    throw Error(Errc::timeout, "embedding endpoint " + config.endpoint + " unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) throw Error(Errc::bad_response, "HTTP " + std::to_string(res->status));

  std::vector<EmbeddingVector> out;
  try {
    const auto j = nlohmann::json::parse(res->body);
    const auto& vectors = j.at("vectors");
    if (!vectors.is_array() || vectors.size() != texts.size()) {
      throw Error(Errc::bad_response, "expected " + std::to_string(texts.size()) + " vectors, got " +
                                          std::to_string(vectors.is_array() ? vectors.size() : 0));
    }
    for (const auto& v : vectors) {
      auto values = v.get<std::vector<double>>();
      if (values.size() != config.dimension) {
        throw Error(Errc::bad_response, "vector dimension " + std::to_string(values.size()) + " != " +
                                            std::to_string(config.dimension));
      }
      for (double x : values) {
        if (!std::isfinite(x)) throw Error(Errc::bad_response, "non-finite vector component");
      }
      out.push_back(normalized(std::move(values)));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::bad_response, e.what());
  }
  return out;
}

}  // namespace

std::vector<EmbeddingVector> remote_embed(std::span<const std::string> texts, const EmbedderConfig& config) {
  config.validate();
  std::vector<EmbeddingVector> out(texts.size());
  std::vector<std::pair<std::size_t, std::future<std::vector<EmbeddingVector>>>> in_flight;

  auto drain_one = [&] {
    auto [offset, fut] = std::move(in_flight.front());
    in_flight.erase(in_flight.begin());
    auto batch = fut.get();
    std::move(batch.begin(), batch.end(), out.begin() + static_cast<std::ptrdiff_t>(offset));
  };

  try {
    for (std::size_t offset = 0; offset < texts.size(); offset += config.batch_size) {
      const auto count = std::min(config.batch_size, texts.size() - offset);
      if (in_flight.size() == config.max_in_flight) drain_one();
      in_flight.emplace_back(offset, std::async(std::launch::async, post_batch, texts.subspan(offset, count), config));
    }
    while (!in_flight.empty()) drain_one();
  } catch (...) {
    for (auto& [_, fut] : in_flight) fut.wait();
    throw;
  }
  return out;
}

ReferenceEmbedder::ReferenceEmbedder(EmbedderConfig config) : config_(std::move(config)) {
  config_.kind = EmbedderKind::reference;
  config_.validate();
}

std::vector<EmbeddingVector> ReferenceEmbedder::embed(std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_text(t, config_));
  return out;
}

RemoteEmbedder::RemoteEmbedder(EmbedderConfig config) : config_(std::move(config)) {
  config_.kind = EmbedderKind::remote;
  config_.validate();
}

std::vector<EmbeddingVector> RemoteEmbedder::embed(std::span<const std::string> texts) const {
  return remote_embed(texts, config_);
}

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config) {
  if (config.kind == EmbedderKind::remote) return std::make_unique<RemoteEmbedder>(config);
  return std::make_unique<ReferenceEmbedder>(config);
}

}  // namespace funnel
