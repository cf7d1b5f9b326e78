#include "funnel/corpus.hpp"

#include <fstream>
#include <unordered_set>

#include "funnel/text.hpp"

namespace funnel {

using nlohmann::json;

std::string_view to_string(SourceField field) {
  switch (field) {
    case SourceField::title: return "title";
    case SourceField::abstract: return "abstract";
    case SourceField::section: return "section";
  }
  return "unknown";
}

void ChunkPolicy::validate() const {
  if (max_tokens == 0) throw Error(Errc::invalid_argument, "chunk max_tokens must be >= 1");
  if (overlap >= max_tokens) throw Error(Errc::invalid_argument, "chunk overlap must be smaller than max_tokens");
}

namespace {

std::string optional_string(const json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return {};
  if (!it->is_string()) throw Error(Errc::parse_error, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

Document ingest_document(const json& record) {
  if (!record.is_object()) throw Error(Errc::parse_error, "record must be an object");
  auto id = record.find("id");
  if (id == record.end() || !id->is_string() || id->get_ref<const std::string&>().empty()) {
    throw Error(Errc::parse_error, "record needs a non-empty string 'id'");
  }

  Document doc;
  doc.id = id->get<std::string>();
  doc.title = optional_string(record, "title");
  doc.abstract = optional_string(record, "abstract");

  if (auto it = record.find("sections"); it != record.end() && !it->is_null()) {
    if (!it->is_array()) throw Error(Errc::parse_error, "'sections' must be an array");
    for (const auto& s : *it) {
      if (!s.is_object()) throw Error(Errc::parse_error, "section must be an object");
      Section section{optional_string(s, "heading"), optional_string(s, "text")};
      if (trim(section.text).empty()) throw Error(Errc::parse_error, "section text is blank");
      doc.sections.push_back(std::move(section));
    }
  }

  if (auto it = record.find("metadata"); it != record.end() && !it->is_null()) {
    if (!it->is_object()) throw Error(Errc::parse_error, "'metadata' must be an object");
    for (const auto& [key, value] : it->items()) {
      if (!value.is_string()) throw Error(Errc::parse_error, "metadata value for '" + key + "' must be a string");
      doc.metadata.emplace(key, value.get<std::string>());
    }
  }

  if (trim(doc.title).empty() && trim(doc.abstract).empty() && doc.sections.empty()) {
    throw Error(Errc::empty_document, "document '" + doc.id + "' has no content");
  }
  return doc;
}

Document parse_document_line(std::string_view line) {
  json record;
  try {
    record = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, e.what());
  }
  return ingest_document(record);
}

json to_json(const Document& doc) {
  json sections = json::array();
  for (const auto& s : doc.sections) sections.push_back({{"heading", s.heading}, {"text", s.text}});
  json metadata = json::object();
  for (const auto& [k, v] : doc.metadata) metadata[k] = v;
  return {{"id", doc.id},
          {"title", doc.title},
          {"abstract", doc.abstract},
          {"sections", std::move(sections)},
          {"metadata", std::move(metadata)}};
}

std::string export_document_line(const Document& doc) { return to_json(doc).dump(); }

namespace {

void chunk_field(const Document& doc, SourceField source, std::optional<std::size_t> section_index,
                 const std::string& text, const ChunkPolicy& policy, std::vector<Chunk>& out) {
  const std::vector<Token> tokens = segment_words(text);
  if (tokens.empty()) return;

  auto emit = [&](std::size_t begin_byte, std::size_t end_byte, std::size_t token_count) {
    Chunk c;
    c.doc_id = doc.id;
    c.chunk_id = out.size();
    c.source_field = source;
    c.section_index = section_index;
    c.text = text.substr(begin_byte, end_byte - begin_byte);
    c.token_count = token_count;
    c.field_offset = begin_byte;
    out.push_back(std::move(c));
  };

  const std::size_t total = tokens.size();
  if (total <= policy.max_tokens) {
    emit(0, text.size(), total);
    return;
  }

  // Windows start every `step` tokens; the last one runs to the end of the
  // field. Window boundaries sit on token starts, so re-analysing a window's
  // text yields exactly its tokens.
  const std::size_t step = policy.max_tokens - policy.overlap;
  const std::size_t windows = (total - policy.overlap + step - 1) / step;
  for (std::size_t w = 0; w < windows; ++w) {
    const std::size_t first = w * step;
    const bool last = w + 1 == windows;
    const std::size_t end_token = last ? total : first + policy.max_tokens;
    const std::size_t begin_byte = w == 0 ? 0 : tokens[first].begin;
    const std::size_t end_byte = last ? text.size() : tokens[end_token].begin;
    emit(begin_byte, end_byte, end_token - first);
  }
}

}  // namespace

std::vector<Chunk> chunk_document(const Document& doc, const ChunkPolicy& policy) {
  policy.validate();
  std::vector<Chunk> out;
  chunk_field(doc, SourceField::title, std::nullopt, doc.title, policy, out);
  chunk_field(doc, SourceField::abstract, std::nullopt, doc.abstract, policy, out);
  for (std::size_t i = 0; i < doc.sections.size(); ++i) {
    chunk_field(doc, SourceField::section, i, doc.sections[i].text, policy, out);
  }
  return out;
}

void Corpus::insert(Document doc) {
  if (by_id_.contains(doc.id)) throw Error(Errc::duplicate_id, "document '" + doc.id + "' already present");
  by_id_.emplace(doc.id, docs_.size());
  docs_.push_back(std::move(doc));
}

bool Corpus::erase(std::string_view id) {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return false;
  docs_.erase(docs_.begin() + static_cast<std::ptrdiff_t>(it->second));
  by_id_.clear();
  for (std::size_t i = 0; i < docs_.size(); ++i) by_id_.emplace(docs_[i].id, i);
  return true;
}

const Document* Corpus::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &docs_[it->second];
}

std::string sections_text(const Document& doc) {
  std::string out;
  for (const auto& s : doc.sections) {
    if (!out.empty()) out += "\n\n";
    if (!s.heading.empty()) {
      out += s.heading;
      out += '\n';
    }
    out += s.text;
  }
  return out;
}

namespace {

void accumulate(FieldStats& stats, std::string_view text) {
  const auto tokens = segment_words(text);
  if (tokens.empty()) return;
  stats.total_tokens += tokens.size();
  stats.docs_with_field += 1;
  std::unordered_set<std::string> seen;
  for (const auto& t : tokens) {
    if (seen.insert(t.text).second) stats.document_frequency[t.text] += 1;
  }
}

}  // namespace

CorpusStats Corpus::stats() const {
  CorpusStats s;
  s.doc_count = docs_.size();
  for (const auto& d : docs_) {
    accumulate(s.title, d.title);
    accumulate(s.abstract, d.abstract);
    accumulate(s.sections, sections_text(d));
  }
  return s;
}

CorpusLoad load_corpus_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::file_not_found, path.string());

  CorpusLoad result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      result.corpus.insert(parse_document_line(line));
    } catch (const Error& e) {
      result.errors.emplace_back(e.code() == Errc::duplicate_id || e.code() == Errc::empty_document ? e.code()
                                                                                                      : Errc::parse_error,
                                 e.detail(), line_no);
    }
  }
  result.stats = result.corpus.stats();
  return result;
}

}  // namespace funnel
