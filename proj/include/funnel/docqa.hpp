#pragma once

// In-document hybrid question answering: a per-document chunk index, BM25
// and multihop dense retrieval over it, reciprocal rank fusion, reranking,
// extractive passage selection, reasoning-chain assembly and context packing.
// Every stage reports a TraceEvent so its intermediate output can be shown.

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "funnel/corpus.hpp"
#include "funnel/embed.hpp"
#include "funnel/sparse_index.hpp"
#include "funnel/trace.hpp"

namespace funnel {

class ChunkIndex {
 public:
  /// Chunks the document, indexes chunk texts as one BM25 field and embeds
  /// all chunks in one batch. Embedder errors surface as EmbeddingFailure.
  ChunkIndex(const Document& doc, const Embedder& embedder, const ChunkPolicy& policy = {});

  const std::string& doc_id() const noexcept { return doc_id_; }
  const std::vector<Chunk>& chunks() const noexcept { return chunks_; }
  std::size_t size() const noexcept { return chunks_.size(); }
  const FieldIndex& sparse() const noexcept { return sparse_; }
  std::size_t dimension() const noexcept { return dim_; }
  const std::string& embedder_key() const noexcept { return embedder_key_; }

  /// Row-major chunk embeddings, size() x dimension().
  const std::vector<float>& embeddings() const noexcept { return embeddings_; }
  std::span<const float> embedding(std::size_t chunk_id) const;
  bool is_zero(std::size_t chunk_id) const { return zero_.at(chunk_id) != 0; }
  EmbeddingVector embedding_vector(std::size_t chunk_id) const;

  /// BM25 IDF of `term` over the chunks.
  double idf(std::string_view term) const;

 private:
  std::string doc_id_;
  std::vector<Chunk> chunks_;
  FieldIndex sparse_;
  std::size_t dim_ = 0;
  std::string embedder_key_;
  std::vector<float> embeddings_;
  std::vector<char> zero_;
};

ChunkIndex build_chunk_index(const Document& doc, const Embedder& embedder, const ChunkPolicy& policy = {});

struct ChunkHit {
  std::size_t chunk_id = 0;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based

  friend bool operator==(const ChunkHit&, const ChunkHit&) = default;
};
using ChunkRanking = std::vector<ChunkHit>;

/// BM25 over chunk texts, chunks with a positive score only, top-m.
ChunkRanking sparse_chunk_search(std::string_view question, const ChunkIndex& index, std::size_t m);

/// Cosine against every chunk, highest first, ties by chunk id; top-m.
ChunkRanking dense_search(const EmbeddingVector& query, const ChunkIndex& index, std::size_t m);

struct MultihopParams {
  std::size_t hops = 3;
  std::size_t per_hop = 5;
  double alpha = 0.5;  // weight of the original question in the next hop's query
};

struct HopResult {
  std::size_t hop = 0;  // 1-based
  EmbeddingVector query;
  std::vector<ChunkHit> selected;  // never repeats a chunk chosen in an earlier hop
};

/// Hop i takes the top-m not yet selected chunks for query v_i; then
/// v_{i+1} = normalize(alpha * v_1 + (1 - alpha) * centroid(hop i selections)).
/// Stops early once every chunk has been selected.
std::vector<HopResult> multihop_dense_search(const EmbeddingVector& question, const ChunkIndex& index,
                                             const MultihopParams& params = {});

/// Hops flattened in hop order, reranked 1..n.
ChunkRanking flatten_hops(const std::vector<HopResult>& hops);

struct FusionEntry {
  std::size_t chunk_id = 0;
  double score = 0.0;
  std::vector<std::optional<std::size_t>> ranks;  // per input list
};

struct FusionResult {
  std::vector<FusionEntry> entries;
  std::vector<std::string> list_names;
};

/// score(c) = sum over lists containing c of 1 / (k_rrf + rank). Descending,
/// ties by chunk id. `names` labels the input lists in the trace.
FusionResult fuse_rrf(std::span<const ChunkRanking> lists, double k_rrf = 60.0,
                      std::vector<std::string> names = {});

/// Odd ranks ascending, then even ranks descending: the best item lands first
/// and the second best last.
template <typename T>
std::vector<T> reorder_lost_in_middle(const std::vector<T>& ranked) {
  std::vector<T> out;
  out.reserve(ranked.size());
  for (std::size_t i = 0; i < ranked.size(); i += 2) out.push_back(ranked[i]);
  const std::size_t last_even = ranked.size() % 2 == 0 ? ranked.size() : ranked.size() - 1;
  for (std::size_t i = last_even; i >= 2; i -= 2) out.push_back(ranked[i - 1]);
  return out;
}

/// Cross-encoder slot: one relevance score per passage, same order.
class PairScorer {
 public:
  virtual ~PairScorer() = default;
  virtual std::string name() const = 0;
  virtual std::vector<double> score(std::string_view question, std::span<const std::string> passages,
                                    const ChunkIndex& index) const = 0;
};

/// Share of the question's IDF mass found in the passage.
class LexicalPairScorer final : public PairScorer {
 public:
  std::string name() const override { return "lexical-idf-overlap"; }
  std::vector<double> score(std::string_view question, std::span<const std::string> passages,
                            const ChunkIndex& index) const override;
};

/// POST {"query", "passages":[...]} -> {"scores":[...]}.
class RemotePairScorer final : public PairScorer {
 public:
  RemotePairScorer(std::string endpoint, std::chrono::milliseconds timeout);
  std::string name() const override { return "remote:" + endpoint_; }
  std::vector<double> score(std::string_view question, std::span<const std::string> passages,
                            const ChunkIndex& index) const override;

 private:
  std::string endpoint_;
  std::chrono::milliseconds timeout_;
};

struct Reranked {
  ChunkRanking ranking;
  TraceEvent event;
};

/// Scores (question, chunk) for the candidates and stable-sorts them, so
/// equal scores keep candidate order. Throws ScorerFailure.
Reranked rerank(std::string_view question, std::span<const std::size_t> candidates, const ChunkIndex& index,
                const PairScorer& scorer);

struct Passage {
  std::size_t chunk_id = 0;
  std::size_t begin = 0;  // byte span inside the chunk text
  std::size_t end = 0;
  std::string text;
  double score = 0.0;
  std::size_t rank = 0;

  friend bool operator==(const Passage&, const Passage&) = default;
};

/// Sentence spans (trimmed) split after . ! ? and at newlines.
std::vector<std::pair<std::size_t, std::size_t>> split_sentences(std::string_view text);

/// Extractive QA slot.
class ExtractiveHead {
 public:
  virtual ~ExtractiveHead() = default;
  virtual std::string name() const = 0;
  virtual std::vector<Passage> extract(std::string_view question, std::span<const std::size_t> chunk_ids,
                                       const ChunkIndex& index, std::size_t top_p) const = 0;
};

/// Sentence score = sum of IDF of distinct question terms it contains.
/// Zero-score sentences are dropped; ties go to the smaller chunk id, then offset.
class LexicalExtractiveHead final : public ExtractiveHead {
 public:
  std::string name() const override { return "lexical-idf-sentence"; }
  std::vector<Passage> extract(std::string_view question, std::span<const std::size_t> chunk_ids,
                               const ChunkIndex& index, std::size_t top_p) const override;
};

std::vector<Passage> extract_passages(std::string_view question, std::span<const std::size_t> chunk_ids,
                                      const ChunkIndex& index, std::size_t top_p,
                                      const ExtractiveHead& head = LexicalExtractiveHead{});

struct Evidence {
  std::size_t chunk_id = 0;
  double score = 0.0;
  std::string excerpt;  // at most kExcerptLength code points
};

struct ReasoningStep {
  std::size_t hop = 0;
  std::vector<Evidence> evidence;
};

inline constexpr std::size_t kExcerptLength = 280;

/// One step per non-empty hop. An evidence excerpt is the chunk's best
/// passage when there is one, else the start of the chunk text.
std::vector<ReasoningStep> assemble_reasoning_chain(const std::vector<HopResult>& hops,
                                                    std::span<const Passage> passages, const ChunkIndex& index);

struct ContextItem {
  std::size_t chunk_id = 0;
  std::string text;
  std::size_t token_count = 0;
};

struct ContextPack {
  std::vector<ContextItem> items;
  std::size_t total_tokens = 0;
  std::size_t budget = 0;
};

/// Keeps the fused prefix that fits the token budget (or the best chunk cut
/// to the budget when none fits), then applies reorder_lost_in_middle.
ContextPack pack_context(const FusionResult& fused, const ChunkIndex& index, std::size_t budget_tokens);

/// Generation slot. The default renders "Based on [refs]: <passages>".
class TextGenerator {
 public:
  virtual ~TextGenerator() = default;
  virtual std::string generate(std::string_view question, std::span<const Passage> passages,
                               const ContextPack& context) const = 0;
};

class TemplateGenerator final : public TextGenerator {
 public:
  std::string generate(std::string_view question, std::span<const Passage> passages,
                       const ContextPack& context) const override;
};

enum class AskOutput { extractive, chain, packed, all };
std::string_view to_string(AskOutput output);
AskOutput parse_ask_output(std::string_view text);

struct PipelineConfig {
  std::size_t sparse_depth = 15;
  MultihopParams multihop;
  double k_rrf = 60.0;
  std::size_t rerank_depth = 5;  // reranked chunks handed to the extractive head
  std::size_t top_passages = 3;
  std::size_t context_budget = 1024;
};

struct PipelineProviders {
  const PairScorer* scorer = nullptr;          // default LexicalPairScorer
  const ExtractiveHead* head = nullptr;        // default LexicalExtractiveHead
  const TextGenerator* generator = nullptr;    // default TemplateGenerator
};

struct AnswerBundle {
  std::string question;
  std::string doc_id;
  AskOutput output = AskOutput::all;
  std::vector<Passage> passages;
  std::vector<ReasoningStep> chain;
  ContextPack context;
  std::string draft;
  Trace trace;
};

/// Runs the stages required by `output`, in order:
///   chunking, sparse, dense-hop-1..H, fusion, [rerank, extract], [chain], [pack]
AnswerBundle answer_question(const ChunkIndex& index, std::string_view question, const Embedder& embedder,
                             AskOutput output = AskOutput::all, const PipelineConfig& config = {},
                             const PipelineProviders& providers = {});

nlohmann::json to_json(const ChunkRanking& ranking);
nlohmann::json to_json(const FusionResult& fused);
nlohmann::json to_json(const Passage& passage);
nlohmann::json to_json(const std::vector<ReasoningStep>& chain);
nlohmann::json to_json(const ContextPack& pack);
/// {question, passages, chain, context, trace} plus doc_id, output and draft.
nlohmann::json to_json(const AnswerBundle& bundle);

}  // namespace funnel
