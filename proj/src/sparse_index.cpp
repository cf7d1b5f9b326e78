#include "funnel/sparse_index.hpp"

#include <algorithm>
#include <cmath>

#include "funnel/error.hpp"

namespace funnel {

double bm25_idf(std::uint64_t doc_count, std::uint64_t df) {
  const double n = static_cast<double>(doc_count);
  const double d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

FieldIndex::FieldIndex(std::string name, AnalyzerConfig analyzer, std::size_t doc_slots)
    : name_(std::move(name)), analyzer_(std::move(analyzer)), doc_length_(doc_slots, 0) {
  analyzer_.validate();
}

void FieldIndex::add(std::uint32_t doc, std::string_view text) {
  const auto tokens = analyze(text, analyzer_);
  if (tokens.empty()) return;
  std::unordered_map<std::string_view, std::uint32_t> counts;
  for (const auto& t : tokens) counts[t] += 1;
  // Sorted so that postings construction does not depend on hash order.
  std::vector<std::pair<std::string_view, std::uint32_t>> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  for (const auto& [term, tf] : sorted) add_posting(std::string(term), doc, tf);
  set_doc_length(doc, static_cast<std::uint32_t>(tokens.size()));
}

void FieldIndex::add_posting(const std::string& term, std::uint32_t doc, std::uint32_t tf) {
  auto& list = postings_[term];
  if (!list.docs.empty() && list.docs.back() >= doc) {
    throw Error(Errc::invalid_argument, "postings must be added in increasing document order");
  }
  list.docs.push_back(doc);
  list.tfs.push_back(static_cast<double>(tf));
}

void FieldIndex::set_doc_length(std::uint32_t doc, std::uint32_t length) { doc_length_.at(doc) = length; }

void FieldIndex::finish(const Bm25Params& params) {
  params_ = params;
  docs_with_field_ = 0;
  total_tokens_ = 0;
  for (auto len : doc_length_) {
    if (len == 0) continue;
    ++docs_with_field_;
    total_tokens_ += len;
  }
  average_length_ =
      docs_with_field_ == 0 ? 0.0 : static_cast<double>(total_tokens_) / static_cast<double>(docs_with_field_);
  norm_.assign(doc_length_.size(), 0.0);
  for (std::size_t d = 0; d < doc_length_.size(); ++d) {
    if (doc_length_[d] == 0) continue;
    norm_[d] = params.k1 * (1.0 - params.b + params.b * static_cast<double>(doc_length_[d]) / average_length_);
  }
}

const PostingList* FieldIndex::postings(std::string_view term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? nullptr : &it->second;
}

std::uint64_t FieldIndex::df(std::string_view term) const {
  const auto* p = postings(term);
  return p == nullptr ? 0 : p->docs.size();
}

std::uint32_t FieldIndex::tf(std::string_view term, std::uint32_t doc) const {
  const auto* p = postings(term);
  if (p == nullptr) return 0;
  auto it = std::lower_bound(p->docs.begin(), p->docs.end(), doc);
  if (it == p->docs.end() || *it != doc) return 0;
  return static_cast<std::uint32_t>(p->tfs[static_cast<std::size_t>(it - p->docs.begin())]);
}

std::vector<std::string> FieldIndex::sorted_terms() const {
  std::vector<std::string> terms;
  terms.reserve(postings_.size());
  for (const auto& [t, _] : postings_) terms.push_back(t);
  std::sort(terms.begin(), terms.end());
  return terms;
}

void FieldIndex::accumulate(std::string_view term, double scale, std::span<double> scores,
                            const simd::KernelTable& kernels) const {
  const auto* p = postings(term);
  if (p == nullptr) return;
  const std::size_t n = p->docs.size();
  std::vector<double> norm(n);
  std::vector<double> weight(n);
  for (std::size_t i = 0; i < n; ++i) norm[i] = norm_[p->docs[i]];
  kernels.bm25_weights(p->tfs.data(), norm.data(), n, bm25_idf(docs_with_field_, n), params_.k1 + 1.0,
                       weight.data());
  for (std::size_t i = 0; i < n; ++i) scores[p->docs[i]] += scale * weight[i];
}

double bm25_score(std::span<const std::string> query_tokens, std::uint32_t doc, const FieldIndex& field,
                  double k1, double b) {
  const std::uint32_t len = field.doc_length(doc);
  if (len == 0) return 0.0;
  const double norm = k1 * (1.0 - b + b * static_cast<double>(len) / field.average_length());
  double score = 0.0;
  for (const auto& token : query_tokens) {
    const std::uint32_t tf = field.tf(token, doc);
    if (tf == 0) continue;
    const double t = static_cast<double>(tf);
    score += bm25_idf(field.doc_count(), field.df(token)) * ((t * (k1 + 1.0)) / (t + norm));
  }
  return score;
}

std::string_view to_string(SourceText source) {
  switch (source) {
    case SourceText::title: return "title";
    case SourceText::abstract: return "abstract";
    case SourceText::sections: return "sections";
  }
  return "unknown";
}

SourceText parse_source_text(std::string_view text) {
  for (SourceText s : {SourceText::title, SourceText::abstract, SourceText::sections}) {
    if (to_string(s) == text) return s;
  }
  throw Error(Errc::parse_error, "unknown source field '" + std::string(text) + "'");
}

IndexConfig IndexConfig::defaults() {
  IndexConfig c;
  const auto standard = AnalyzerConfig::standard_english();
  const auto grams = AnalyzerConfig::ngram_english(3);
  c.fields = {
      {"title", SourceText::title, standard, 3.0, true},
      {"title.ngram", SourceText::title, grams, 0.3, false},
      {"abstract", SourceText::abstract, standard, 2.0, true},
      {"abstract.ngram", SourceText::abstract, grams, 0.3, false},
      {"sections", SourceText::sections, standard, 1.0, true},
      {"sections.ngram", SourceText::sections, grams, 0.3, false},
  };
  return c;
}

IndexSet::IndexSet(IndexConfig config, std::vector<std::string> doc_ids, std::vector<std::string> titles,
                   std::vector<std::vector<std::uint32_t>> chunk_lengths, std::vector<FieldIndex> fields)
    : config_(std::move(config)),
      doc_ids_(std::move(doc_ids)),
      titles_(std::move(titles)),
      chunk_lengths_(std::move(chunk_lengths)),
      fields_(std::move(fields)) {
  for (std::uint32_t i = 0; i < doc_ids_.size(); ++i) ordinals_.emplace(doc_ids_[i], i);
}

std::optional<std::uint32_t> IndexSet::ordinal(std::string_view doc_id) const {
  auto it = ordinals_.find(std::string(doc_id));
  if (it == ordinals_.end()) return std::nullopt;
  return it->second;
}

const FieldIndex* IndexSet::field(std::string_view name) const {
  for (const auto& f : fields_) {
    if (f.name() == name) return &f;
  }
  return nullptr;
}

IndexSet build_index(const Corpus& corpus, const IndexConfig& config, const ChunkPolicy& chunking) {
  const auto& docs = corpus.documents();
  std::vector<FieldIndex> fields;
  fields.reserve(config.fields.size());
  for (const auto& spec : config.fields) {
    if (!(spec.boost > 0.0)) throw Error(Errc::invalid_argument, "field boost must be > 0");
    fields.emplace_back(spec.name, spec.analyzer, docs.size());
  }

  std::vector<std::string> ids;
  std::vector<std::string> titles;
  std::vector<std::vector<std::uint32_t>> chunk_lengths;
  for (std::uint32_t d = 0; d < docs.size(); ++d) {
    const Document& doc = docs[d];
    ids.push_back(doc.id);
    titles.push_back(doc.title);
    std::vector<std::uint32_t> lengths;
    for (const auto& c : chunk_document(doc, chunking)) lengths.push_back(static_cast<std::uint32_t>(c.token_count));
    chunk_lengths.push_back(std::move(lengths));

    const std::string sections = sections_text(doc);
    for (std::size_t f = 0; f < config.fields.size(); ++f) {
      switch (config.fields[f].source) {
        case SourceText::title: fields[f].add(d, doc.title); break;
        case SourceText::abstract: fields[f].add(d, doc.abstract); break;
        case SourceText::sections: fields[f].add(d, sections); break;
      }
    }
  }
  for (auto& f : fields) f.finish(config.bm25);
  return IndexSet(config, std::move(ids), std::move(titles), std::move(chunk_lengths), std::move(fields));
}

void finalize_ranking(RankedList& list, std::size_t k) {
  std::sort(list.begin(), list.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  });
  if (list.size() > k) list.resize(k);
  for (std::size_t i = 0; i < list.size(); ++i) list[i].rank = i + 1;
}

namespace {

struct GroupScores {
  std::vector<double> best;    // max_v weight_v * S(v, d)
  std::vector<char> matched;   // some variation token occurs in a matching field
};

GroupScores score_group(const VariationGroup& group, const IndexSet& index) {
  const std::size_t n = index.doc_count();
  const auto& specs = index.config().fields;
  GroupScores out{std::vector<double>(n, 0.0), std::vector<char>(n, 0)};
  std::vector<double> variation(n);
  for (const auto& v : group.variations) {
    std::fill(variation.begin(), variation.end(), 0.0);
    for (std::size_t f = 0; f < specs.size(); ++f) {
      const FieldIndex& field = index.fields()[f];
      for (const auto& token : analyze(v.text, field.analyzer())) {
        field.accumulate(token, specs[f].boost, variation);
        if (!specs[f].matching) continue;
        if (const auto* p = field.postings(token)) {
          for (auto d : p->docs) out.matched[d] = 1;
        }
      }
    }
    for (std::size_t d = 0; d < n; ++d) out.best[d] = std::max(out.best[d], v.weight * variation[d]);
  }
  return out;
}

}  // namespace

Retrieval execute_query_plan(const QueryPlan& plan, const IndexSet& index, std::size_t k) {
  if (plan.empty()) throw Error(Errc::empty_plan, "query plan has no clauses");
  if (k == 0) throw Error(Errc::invalid_argument, "k must be >= 1");
  plan.validate();

  const std::size_t n = index.doc_count();
  std::vector<double> total(n, 0.0);
  std::vector<char> candidate(n, plan.must.empty() ? 0 : 1);

  for (const auto& g : plan.must) {
    const auto s = score_group(g, index);
    for (std::size_t d = 0; d < n; ++d) {
      candidate[d] = static_cast<char>(candidate[d] && s.matched[d]);
      total[d] += g.boost * s.best[d];
    }
  }
  for (const auto& g : plan.should) {
    const auto s = score_group(g, index);
    for (std::size_t d = 0; d < n; ++d) {
      if (plan.must.empty() && s.matched[d]) candidate[d] = 1;
      total[d] += g.boost * s.best[d];
    }
  }

  Retrieval r;
  std::size_t candidates = 0;
  for (std::uint32_t d = 0; d < n; ++d) {
    if (!candidate[d]) continue;
    ++candidates;
    r.results.push_back({index.doc_id(d), total[d], 0});
  }
  finalize_ranking(r.results, k);
  r.event.stage = std::string(stage::retrieve);
  r.event.payload = {{"k", k},
                     {"candidates", candidates},
                     {"returned", r.results.size()},
                     {"must_groups", plan.must.size()},
                     {"should_groups", plan.should.size()},
                     {"results", to_json(r.results)}};
  return r;
}

nlohmann::json to_json(const RankedList& list) {
  auto out = nlohmann::json::array();
  for (const auto& s : list) out.push_back({{"rank", s.rank}, {"doc_id", s.doc_id}, {"score", s.score}});
  return out;
}

}  // namespace funnel
