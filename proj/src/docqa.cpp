#include "funnel/docqa.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <httplib.h>

#include "funnel/error.hpp"
#include "funnel/simd/kernels.hpp"
#include "funnel/text.hpp"

namespace funnel {

using nlohmann::json;

namespace {

std::vector<std::string> distinct_terms(std::string_view text) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto& t : analyze(text, AnalyzerConfig::standard_english())) {
    if (seen.insert(t).second) out.push_back(std::move(t));
  }
  return out;
}

std::set<std::string> term_set(std::string_view text) {
  auto terms = analyze(text, AnalyzerConfig::standard_english());
  return {std::make_move_iterator(terms.begin()), std::make_move_iterator(terms.end())};
}

void sort_hits(ChunkRanking& hits) {
  std::sort(hits.begin(), hits.end(), [](const ChunkHit& a, const ChunkHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk_id < b.chunk_id;
  });
}

void assign_ranks(ChunkRanking& hits) {
  for (std::size_t i = 0; i < hits.size(); ++i) hits[i].rank = i + 1;
}

}  // namespace

ChunkIndex::ChunkIndex(const Document& doc, const Embedder& embedder, const ChunkPolicy& policy)
    : doc_id_(doc.id),
      chunks_(chunk_document(doc, policy)),
      sparse_("chunks", AnalyzerConfig::standard_english(), chunks_.size()),
      dim_(embedder.dimension()),
      embedder_key_(embedder.key()) {
  for (std::size_t i = 0; i < chunks_.size(); ++i) sparse_.add(static_cast<std::uint32_t>(i), chunks_[i].text);
  sparse_.finish(Bm25Params{});

  std::vector<std::string> texts;
  texts.reserve(chunks_.size());
  for (const auto& c : chunks_) texts.push_back(c.text);
  std::vector<EmbeddingVector> vectors;
  try {
    vectors = embedder.embed(texts);
  } catch (const Error& e) {
    throw Error(Errc::embedding_failure, std::string(to_string(e.code())) + ": " + e.detail());
  }
  if (vectors.size() != chunks_.size()) throw Error(Errc::embedding_failure, "embedder returned wrong vector count");

  embeddings_.reserve(chunks_.size() * dim_);
  for (const auto& v : vectors) {
    if (v.dimension() != dim_) throw Error(Errc::embedding_failure, "embedder returned wrong dimension");
    embeddings_.insert(embeddings_.end(), v.values.begin(), v.values.end());
    zero_.push_back(static_cast<char>(v.zero));
  }
}

std::span<const float> ChunkIndex::embedding(std::size_t chunk_id) const {
  if (chunk_id >= chunks_.size()) throw Error(Errc::invalid_argument, "chunk id out of range");
  return {embeddings_.data() + chunk_id * dim_, dim_};
}

EmbeddingVector ChunkIndex::embedding_vector(std::size_t chunk_id) const {
  const auto row = embedding(chunk_id);
  return {std::vector<float>(row.begin(), row.end()), is_zero(chunk_id)};
}

double ChunkIndex::idf(std::string_view term) const { return bm25_idf(sparse_.doc_count(), sparse_.df(term)); }

ChunkIndex build_chunk_index(const Document& doc, const Embedder& embedder, const ChunkPolicy& policy) {
  return ChunkIndex(doc, embedder, policy);
}

ChunkRanking sparse_chunk_search(std::string_view question, const ChunkIndex& index, std::size_t m) {
  std::vector<double> scores(index.size(), 0.0);
  for (const auto& token : analyze(question, index.sparse().analyzer())) index.sparse().accumulate(token, 1.0, scores);
  ChunkRanking hits;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    if (scores[c] > 0.0) hits.push_back({c, scores[c], 0});
  }
  sort_hits(hits);
  if (hits.size() > m) hits.resize(m);
  assign_ranks(hits);
  return hits;
}

namespace {

// Cosine of `query` against every chunk via the dot-product kernel. Chunk
// embeddings are unit (or flagged zero), so only the query norm is needed.
std::vector<double> cosine_all(const EmbeddingVector& query, const ChunkIndex& index) {
  if (query.dimension() != index.dimension()) {
    throw Error(Errc::dimension_mismatch,
                std::to_string(query.dimension()) + " vs " + std::to_string(index.dimension()));
  }
  std::vector<double> out(index.size(), 0.0);
  if (query.zero || index.size() == 0) return out;
  const auto& k = simd::kernels();
  const double qnorm = std::sqrt(k.dot(query.values.data(), query.values.data(), query.dimension()));
  if (qnorm == 0.0) return out;
  k.dot_rows(query.values.data(), index.embeddings().data(), index.size(), index.dimension(), out.data());
  for (std::size_t c = 0; c < out.size(); ++c) {
    if (index.is_zero(c)) {
      out[c] = 0.0;
      continue;
    }
    const auto row = index.embedding(c);
    const double cnorm = std::sqrt(k.dot(row.data(), row.data(), row.size()));
    out[c] = std::clamp(out[c] / (qnorm * cnorm), -1.0, 1.0);
  }
  return out;
}

}  // namespace

ChunkRanking dense_search(const EmbeddingVector& query, const ChunkIndex& index, std::size_t m) {
  const auto scores = cosine_all(query, index);
  ChunkRanking hits;
  for (std::size_t c = 0; c < scores.size(); ++c) hits.push_back({c, scores[c], 0});
  sort_hits(hits);
  if (hits.size() > m) hits.resize(m);
  assign_ranks(hits);
  return hits;
}

std::vector<HopResult> multihop_dense_search(const EmbeddingVector& question, const ChunkIndex& index,
                                             const MultihopParams& params) {
  if (params.hops == 0) throw Error(Errc::invalid_argument, "hops must be >= 1");
  if (params.per_hop == 0) throw Error(Errc::invalid_argument, "per-hop m must be >= 1");
  if (!(params.alpha >= 0.0 && params.alpha <= 1.0)) throw Error(Errc::invalid_argument, "alpha must be in [0, 1]");

  std::vector<HopResult> hops;
  std::vector<char> taken(index.size(), 0);
  std::size_t remaining = index.size();
  EmbeddingVector query = question;

  for (std::size_t hop = 1; hop <= params.hops && remaining > 0; ++hop) {
    const auto scores = cosine_all(query, index);
    ChunkRanking hits;
    for (std::size_t c = 0; c < scores.size(); ++c) {
      if (!taken[c]) hits.push_back({c, scores[c], 0});
    }
    sort_hits(hits);
    if (hits.size() > params.per_hop) hits.resize(params.per_hop);
    assign_ranks(hits);
    for (const auto& h : hits) taken[h.chunk_id] = 1;
    remaining -= hits.size();

    std::vector<double> next(index.dimension(), 0.0);
    for (const auto& h : hits) {
      const auto row = index.embedding(h.chunk_id);
      for (std::size_t i = 0; i < row.size(); ++i) next[i] += static_cast<double>(row[i]);
    }
    const double inv = 1.0 / static_cast<double>(hits.size());
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] = params.alpha * static_cast<double>(question.values[i]) + (1.0 - params.alpha) * (next[i] * inv);
    }

    hops.push_back({hop, std::move(query), std::move(hits)});
    query = normalized(std::move(next));
  }
  return hops;
}

ChunkRanking flatten_hops(const std::vector<HopResult>& hops) {
  ChunkRanking out;
  for (const auto& h : hops) out.insert(out.end(), h.selected.begin(), h.selected.end());
  assign_ranks(out);
  return out;
}

FusionResult fuse_rrf(std::span<const ChunkRanking> lists, double k_rrf, std::vector<std::string> names) {
  if (lists.empty()) throw Error(Errc::invalid_argument, "fusion needs at least one list");
  if (!names.empty() && names.size() != lists.size()) throw Error(Errc::invalid_argument, "one name per list");
  std::map<std::size_t, FusionEntry> by_chunk;
  for (std::size_t l = 0; l < lists.size(); ++l) {
    for (const auto& hit : lists[l]) {
      auto& e = by_chunk[hit.chunk_id];
      if (e.ranks.empty()) {
        e.chunk_id = hit.chunk_id;
        e.ranks.resize(lists.size());
      }
      if (e.ranks[l]) continue;  // a list names each chunk at most once
      e.ranks[l] = hit.rank;
      e.score += 1.0 / (k_rrf + static_cast<double>(hit.rank));
    }
  }
  FusionResult out;
  out.list_names = std::move(names);
  for (auto& [_, e] : by_chunk) out.entries.push_back(std::move(e));
  std::stable_sort(out.entries.begin(), out.entries.end(), [](const FusionEntry& a, const FusionEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk_id < b.chunk_id;
  });
  return out;
}

std::vector<double> LexicalPairScorer::score(std::string_view question, std::span<const std::string> passages,
                                             const ChunkIndex& index) const {
  const auto terms = distinct_terms(question);
  double total = 0.0;
  std::vector<double> idf;
  for (const auto& t : terms) {
    idf.push_back(index.idf(t));
    total += idf.back();
  }
  std::vector<double> out;
  out.reserve(passages.size());
  for (const auto& p : passages) {
    if (total == 0.0) {
      out.push_back(0.0);
      continue;
    }
    const auto present = term_set(p);
    double hit = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (present.contains(terms[i])) hit += idf[i];
    }
    out.push_back(hit / total);
  }
  return out;
}

RemotePairScorer::RemotePairScorer(std::string endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {}

std::vector<double> RemotePairScorer::score(std::string_view question, std::span<const std::string> passages,
                                            const ChunkIndex&) const {
  const auto [base, path] = split_endpoint(endpoint_);
  httplib::Client client(base);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  json body = {{"query", question}, {"passages", std::vector<std::string>(passages.begin(), passages.end())}};
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) throw Error(Errc::timeout, "scorer endpoint unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200) throw Error(Errc::bad_response, "HTTP " + std::to_string(res->status));
  try {
    return json::parse(res->body).at("scores").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(Errc::bad_response, e.what());
  }
}

Reranked rerank(std::string_view question, std::span<const std::size_t> candidates, const ChunkIndex& index,
                const PairScorer& scorer) {
  std::vector<std::string> texts;
  texts.reserve(candidates.size());
  for (auto c : candidates) texts.push_back(index.chunks().at(c).text);

  std::vector<double> scores;
  try {
    scores = scorer.score(question, texts, index);
  } catch (const Error& e) {
    throw Error(Errc::scorer_failure, std::string(to_string(e.code())) + ": " + e.detail());
  }
  if (scores.size() != candidates.size()) {
    throw Error(Errc::scorer_failure, "scorer returned " + std::to_string(scores.size()) + " scores for " +
                                          std::to_string(candidates.size()) + " candidates");
  }

  Reranked out;
  for (std::size_t i = 0; i < candidates.size(); ++i) out.ranking.push_back({candidates[i], scores[i], 0});
  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [](const ChunkHit& a, const ChunkHit& b) { return a.score > b.score; });
  assign_ranks(out.ranking);
  out.event = {0, std::string(stage::rerank), {{"scorer", scorer.name()}, {"results", to_json(out.ranking)}}};
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> split_sentences(std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  auto push = [&](std::size_t begin, std::size_t end) {
    const auto piece = text.substr(begin, end - begin);
    const auto trimmed = trim(piece);
    if (trimmed.empty()) return;
    const std::size_t b = begin + static_cast<std::size_t>(trimmed.data() - piece.data());
    out.emplace_back(b, b + trimmed.size());
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      push(start, i);
      start = i + 1;
    } else if (c == '.' || c == '!' || c == '?') {
      push(start, i + 1);
      start = i + 1;
    }
  }
  push(start, text.size());
  return out;
}

std::vector<Passage> LexicalExtractiveHead::extract(std::string_view question, std::span<const std::size_t> chunk_ids,
                                                    const ChunkIndex& index, std::size_t top_p) const {
  const auto terms = distinct_terms(question);
  std::vector<Passage> candidates;
  for (auto id : chunk_ids) {
    const std::string& text = index.chunks().at(id).text;
    for (const auto& [b, e] : split_sentences(text)) {
      const auto present = term_set(std::string_view(text).substr(b, e - b));
      double score = 0.0;
      for (const auto& t : terms) {
        if (present.contains(t)) score += index.idf(t);
      }
      if (score > 0.0) candidates.push_back({id, b, e, text.substr(b, e - b), score, 0});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Passage& a, const Passage& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.chunk_id != b.chunk_id) return a.chunk_id < b.chunk_id;
    return a.begin < b.begin;
  });
  if (candidates.size() > top_p) candidates.resize(top_p);
  for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i].rank = i + 1;
  return candidates;
}

std::vector<Passage> extract_passages(std::string_view question, std::span<const std::size_t> chunk_ids,
                                      const ChunkIndex& index, std::size_t top_p, const ExtractiveHead& head) {
  auto passages = head.extract(question, chunk_ids, index, top_p);
  for (const auto& p : passages) {
    const auto& text = index.chunks().at(p.chunk_id).text;
    if (p.begin > p.end || p.end > text.size() || text.compare(p.begin, p.end - p.begin, p.text) != 0) {
      throw Error(Errc::invalid_argument, "extractive head returned a span that does not slice its chunk");
    }
  }
  return passages;
}

std::vector<ReasoningStep> assemble_reasoning_chain(const std::vector<HopResult>& hops,
                                                    std::span<const Passage> passages, const ChunkIndex& index) {
  std::map<std::size_t, const Passage*> best;
  for (const auto& p : passages) {
    auto [it, inserted] = best.emplace(p.chunk_id, &p);
    if (!inserted && p.rank < it->second->rank) it->second = &p;
  }
  std::vector<ReasoningStep> chain;
  for (const auto& h : hops) {
    if (h.selected.empty()) continue;
    ReasoningStep step{h.hop, {}};
    for (const auto& hit : h.selected) {
      auto it = best.find(hit.chunk_id);
      const std::string_view source = it != best.end() ? std::string_view(it->second->text)
                                                       : std::string_view(index.chunks().at(hit.chunk_id).text);
      step.evidence.push_back({hit.chunk_id, hit.score, std::string(utf8_prefix(source, kExcerptLength))});
    }
    chain.push_back(std::move(step));
  }
  return chain;
}

ContextPack pack_context(const FusionResult& fused, const ChunkIndex& index, std::size_t budget_tokens) {
  if (budget_tokens == 0) throw Error(Errc::invalid_argument, "context budget must be >= 1 token");
  ContextPack pack;
  pack.budget = budget_tokens;
  std::vector<ContextItem> kept;
  for (const auto& e : fused.entries) {
    const Chunk& c = index.chunks().at(e.chunk_id);
    if (pack.total_tokens + c.token_count > budget_tokens) break;
    kept.push_back({c.chunk_id, c.text, c.token_count});
    pack.total_tokens += c.token_count;
  }
  if (kept.empty() && !fused.entries.empty()) {
    const Chunk& c = index.chunks().at(fused.entries.front().chunk_id);
    const auto words = segment_words(c.text);
    const std::size_t end = budget_tokens < words.size() ? words[budget_tokens].begin : c.text.size();
    kept.push_back({c.chunk_id, c.text.substr(0, end), std::min(budget_tokens, words.size())});
    pack.total_tokens = kept.back().token_count;
  }
  pack.items = reorder_lost_in_middle(kept);
  return pack;
}

std::string TemplateGenerator::generate(std::string_view, std::span<const Passage> passages,
                                        const ContextPack& context) const {
  std::vector<std::size_t> refs;
  std::string body;
  if (!passages.empty()) {
    for (const auto& p : passages) {
      if (std::find(refs.begin(), refs.end(), p.chunk_id) == refs.end()) refs.push_back(p.chunk_id);
      if (!body.empty()) body += ' ';
      body += p.text;
    }
  } else {
    for (const auto& item : context.items) refs.push_back(item.chunk_id);
    if (!context.items.empty()) body = std::string(utf8_prefix(context.items.front().text, kExcerptLength));
  }
  std::string out = "Based on [";
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (i > 0) out += ", ";
    out += "chunk " + std::to_string(refs[i]);
  }
  out += "]: ";
  out += body;
  return out;
}

std::string_view to_string(AskOutput output) {
  switch (output) {
    case AskOutput::extractive: return "extractive";
    case AskOutput::chain: return "chain";
    case AskOutput::packed: return "packed";
    case AskOutput::all: return "all";
  }
  return "unknown";
}

AskOutput parse_ask_output(std::string_view text) {
  for (AskOutput o : {AskOutput::extractive, AskOutput::chain, AskOutput::packed, AskOutput::all}) {
    if (to_string(o) == text) return o;
  }
  throw Error(Errc::invalid_argument, "unknown output '" + std::string(text) + "'");
}

AnswerBundle answer_question(const ChunkIndex& index, std::string_view question, const Embedder& embedder,
                             AskOutput output, const PipelineConfig& config, const PipelineProviders& providers) {
  if (segment_words(question).empty()) throw Error(Errc::empty_query, "question has no words");
  const LexicalPairScorer default_scorer;
  const LexicalExtractiveHead default_head;
  const TemplateGenerator default_generator;
  const PairScorer& scorer = providers.scorer != nullptr ? *providers.scorer : default_scorer;
  const ExtractiveHead& head = providers.head != nullptr ? *providers.head : default_head;
  const TextGenerator& generator = providers.generator != nullptr ? *providers.generator : default_generator;

  AnswerBundle bundle;
  bundle.question = std::string(question);
  bundle.doc_id = index.doc_id();
  bundle.output = output;

  json chunks = json::array();
  for (const auto& c : index.chunks()) {
    chunks.push_back({{"chunk_id", c.chunk_id},
                      {"source_field", to_string(c.source_field)},
                      {"section_index", c.section_index ? json(*c.section_index) : json(nullptr)},
                      {"token_count", c.token_count}});
  }
  bundle.trace.append(stage::chunking,
                      {{"doc_id", index.doc_id()}, {"embedder", index.embedder_key()}, {"chunks", std::move(chunks)}});

  const auto sparse = sparse_chunk_search(question, index, config.sparse_depth);
  bundle.trace.append(stage::sparse, {{"m", config.sparse_depth}, {"results", to_json(sparse)}});

  EmbeddingVector qvec;
  try {
    const std::string q(question);
    auto vecs = embedder.embed(std::span<const std::string>(&q, 1));
    if (vecs.size() != 1) throw Error(Errc::bad_response, "expected one question vector");
    qvec = std::move(vecs.front());
  } catch (const Error& e) {
    throw Error(Errc::embedding_failure, std::string(to_string(e.code())) + ": " + e.detail());
  }
  const auto hops = multihop_dense_search(qvec, index, config.multihop);
  for (const auto& h : hops) {
    bundle.trace.append(stage::dense_hop(h.hop),
                        {{"hop", h.hop}, {"alpha", config.multihop.alpha}, {"selected", to_json(h.selected)}});
  }

  const std::vector<ChunkRanking> lists{sparse, flatten_hops(hops)};
  const auto fused = fuse_rrf(lists, config.k_rrf, {"sparse", "dense"});
  bundle.trace.append(stage::fusion, to_json(fused));

  const bool want_extract = output != AskOutput::packed;
  const bool want_chain = output == AskOutput::chain || output == AskOutput::all;
  const bool want_pack = output == AskOutput::packed || output == AskOutput::all;

  if (want_extract) {
    std::vector<std::size_t> candidates;
    for (const auto& e : fused.entries) candidates.push_back(e.chunk_id);
    auto reranked = rerank(question, candidates, index, scorer);
    bundle.trace.append(std::move(reranked.event));

    std::vector<std::size_t> top;
    for (std::size_t i = 0; i < reranked.ranking.size() && i < config.rerank_depth; ++i) {
      top.push_back(reranked.ranking[i].chunk_id);
    }
    bundle.passages = extract_passages(question, top, index, config.top_passages, head);
    json passages = json::array();
    for (const auto& p : bundle.passages) passages.push_back(to_json(p));
    bundle.trace.append(stage::extract,
                        {{"head", head.name()}, {"top_p", config.top_passages}, {"passages", std::move(passages)}});
  }
  if (want_chain) {
    bundle.chain = assemble_reasoning_chain(hops, bundle.passages, index);
    bundle.trace.append(stage::chain, {{"steps", to_json(bundle.chain)}});
  }
  if (want_pack) {
    bundle.context = pack_context(fused, index, config.context_budget);
    bundle.trace.append(stage::pack, to_json(bundle.context));
  }
  bundle.draft = generator.generate(question, bundle.passages, bundle.context);
  return bundle;
}

json to_json(const ChunkRanking& ranking) {
  json out = json::array();
  for (const auto& h : ranking) out.push_back({{"chunk_id", h.chunk_id}, {"score", h.score}, {"rank", h.rank}});
  return out;
}

json to_json(const FusionResult& fused) {
  json entries = json::array();
  for (const auto& e : fused.entries) {
    json ranks = json::object();
    for (std::size_t l = 0; l < e.ranks.size(); ++l) {
      const std::string name = l < fused.list_names.size() ? fused.list_names[l] : "list" + std::to_string(l);
      ranks[name + "_rank"] = e.ranks[l] ? json(*e.ranks[l]) : json(nullptr);
    }
    json row = {{"chunk_id", e.chunk_id}, {"score", e.score}};
    row.update(ranks);
    entries.push_back(std::move(row));
  }
  return {{"entries", std::move(entries)}};
}

json to_json(const Passage& p) {
  return {{"chunk_id", p.chunk_id}, {"start", p.begin}, {"end", p.end},
          {"text", p.text},         {"score", p.score}, {"rank", p.rank}};
}

json to_json(const std::vector<ReasoningStep>& chain) {
  json out = json::array();
  for (const auto& step : chain) {
    json evidence = json::array();
    for (const auto& e : step.evidence) {
      evidence.push_back({{"chunk_id", e.chunk_id}, {"score", e.score}, {"excerpt", e.excerpt}});
    }
    out.push_back({{"hop", step.hop}, {"evidence", std::move(evidence)}});
  }
  return out;
}

json to_json(const ContextPack& pack) {
  json items = json::array();
  json order = json::array();
  for (const auto& item : pack.items) {
    items.push_back({{"chunk_id", item.chunk_id}, {"token_count", item.token_count}, {"text", item.text}});
    order.push_back(item.chunk_id);
  }
  return {{"budget", pack.budget}, {"total_tokens", pack.total_tokens}, {"order", std::move(order)}, {"items", std::move(items)}};
}

json to_json(const AnswerBundle& bundle) {
  json passages = json::array();
  for (const auto& p : bundle.passages) passages.push_back(to_json(p));
  json context = json::array();
  for (const auto& item : bundle.context.items) context.push_back(item.chunk_id);
  return {{"question", bundle.question},
          {"doc_id", bundle.doc_id},
          {"output", to_string(bundle.output)},
          {"passages", std::move(passages)},
          {"chain", to_json(bundle.chain)},
          {"context", std::move(context)},
          {"draft", bundle.draft},
          {"trace", to_json(bundle.trace)}};
}

}  // namespace funnel
