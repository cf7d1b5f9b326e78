#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "funnel/error.hpp"

namespace funnel {

struct Section {
  std::string heading;
  std::string text;
};

struct Document {
  std::string id;
  std::string title;
  std::string abstract;
  std::vector<Section> sections;
  std::map<std::string, std::string> metadata;
};

enum class SourceField { title, abstract, section };
std::string_view to_string(SourceField field);

struct Chunk {
  std::string doc_id;
  std::size_t chunk_id = 0;
  SourceField source_field = SourceField::title;
  std::optional<std::size_t> section_index;
  std::string text;
  std::size_t token_count = 0;
  // Byte offset of `text` inside its source field. Window chunks of one
  // field overlap, so offsets are what allow the field to be reassembled.
  std::size_t field_offset = 0;
};

struct ChunkPolicy {
  std::size_t max_tokens = 512;
  std::size_t overlap = 64;

  void validate() const;
};

/// Validates a corpus line record. Throws ParseError for shape problems and
/// EmptyDocument when title, abstract and sections are all blank.
Document ingest_document(const nlohmann::json& record);
Document parse_document_line(std::string_view line);

nlohmann::json to_json(const Document& doc);
std::string export_document_line(const Document& doc);

/// Section-level chunks with a sliding token window for oversized fields.
std::vector<Chunk> chunk_document(const Document& doc, const ChunkPolicy& policy = {});

struct FieldStats {
  std::uint64_t total_tokens = 0;
  std::uint64_t docs_with_field = 0;
  std::unordered_map<std::string, std::uint64_t> document_frequency;

  double average_length() const {
    return docs_with_field == 0 ? 0.0 : static_cast<double>(total_tokens) / static_cast<double>(docs_with_field);
  }
};

struct CorpusStats {
  std::uint64_t doc_count = 0;
  FieldStats title;
  FieldStats abstract;
  FieldStats sections;
};

/// Ordered document store. Single writer while loading; share it as
/// `const Corpus&` (or shared_ptr<const Corpus>) once indexing starts.
class Corpus {
 public:
  void insert(Document doc);
  bool erase(std::string_view id);

  std::size_t size() const noexcept { return docs_.size(); }
  bool empty() const noexcept { return docs_.empty(); }
  const std::vector<Document>& documents() const noexcept { return docs_; }
  const Document* find(std::string_view id) const;

  CorpusStats stats() const;

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

struct CorpusLoad {
  Corpus corpus;
  CorpusStats stats;
  std::vector<Error> errors;  // one per rejected line, each carrying its line number
};

CorpusLoad load_corpus_file(const std::filesystem::path& path);

/// Text of the concatenated `sections` field as the index sees it.
std::string sections_text(const Document& doc);

}  // namespace funnel
