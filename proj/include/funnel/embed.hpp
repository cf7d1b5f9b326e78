#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace funnel {

struct EmbeddingVector {
  std::vector<float> values;
  bool zero = false;  // set for texts with no tokens; values are all 0

  std::size_t dimension() const noexcept { return values.size(); }
};

enum class EmbedderKind { reference, remote };

struct EmbedderConfig {
  EmbedderKind kind = EmbedderKind::reference;
  std::size_t dimension = 256;
  std::uint64_t seed = 0;
  // remote only
  std::string endpoint;  // e.g. http://127.0.0.1:8081/embed
  std::chrono::milliseconds timeout{5000};
  std::size_t batch_size = 64;
  std::size_t max_in_flight = 4;

  void validate() const;
  /// Stable identity, used as a cache key.
  std::string key() const;
};

/// 64-bit FNV-1a with the offset basis xor-ed with `seed`.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0);

/// Hashed bag of analyzer tokens: each token adds +-1 at fnv(token) mod d,
/// sign from the next hash bit; then L2-normalised. Pure and platform-stable.
EmbeddingVector embed_text(std::string_view text, const EmbedderConfig& config);

/// Cosine in [-1, 1]; 0 when either side is zero. Throws DimensionMismatch.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

/// POST {"texts":[...]} -> {"vectors":[[...]]}, in batches, order preserved,
/// vectors re-normalised locally. Throws Timeout or BadResponse.
std::vector<EmbeddingVector> remote_embed(std::span<const std::string> texts, const EmbedderConfig& config);

/// Rescales `values` to unit L2 norm (computed in double); flags all-zero input.
EmbeddingVector normalized(std::vector<double> values);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::string key() const = 0;
};

class ReferenceEmbedder final : public Embedder {
 public:
  explicit ReferenceEmbedder(EmbedderConfig config = {});
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const override;
  std::size_t dimension() const override { return config_.dimension; }
  std::string key() const override { return config_.key(); }

 private:
  EmbedderConfig config_;
};

class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(EmbedderConfig config);
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const override;
  std::size_t dimension() const override { return config_.dimension; }
  std::string key() const override { return config_.key(); }

 private:
  EmbedderConfig config_;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& config);

/// Splits "http://host:port/path" into ("http://host:port", "/path").
std::pair<std::string, std::string> split_endpoint(std::string_view endpoint);

}  // namespace funnel
