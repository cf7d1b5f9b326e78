#include "funnel/index_io.hpp"

#include <fstream>
#include <set>

#include "funnel/error.hpp"

namespace funnel {

using nlohmann::json;

json to_json(const AnalyzerConfig& config) {
  json j = {{"kind", config.kind == AnalyzerKind::standard ? "standard" : "ngram"}};
  if (config.kind == AnalyzerKind::ngram) j["ngram_size"] = config.ngram_size;
  j["stopwords"] = config.stopwords ? json(*config.stopwords) : json(nullptr);
  return j;
}

AnalyzerConfig analyzer_from_json(const json& j) {
  AnalyzerConfig c;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "standard") {
    c.kind = AnalyzerKind::standard;
  } else if (kind == "ngram") {
    c.kind = AnalyzerKind::ngram;
    c.ngram_size = j.at("ngram_size").get<std::size_t>();
  } else {
    throw Error(Errc::parse_error, "unknown analyzer kind '" + kind + "'");
  }
  if (auto it = j.find("stopwords"); it != j.end() && !it->is_null()) {
    auto words = it->get<std::set<std::string, std::less<>>>();
    const auto english = english_stopwords();
    // Share the built-in list when it matches so configs compare cheaply.
    c.stopwords = words == *english ? english : std::make_shared<const std::set<std::string, std::less<>>>(std::move(words));
  }
  c.validate();
  return c;
}

void write_index(const IndexSet& index, std::ostream& out) {
  const auto& config = index.config();
  json fields = json::array();
  for (const auto& spec : config.fields) {
    fields.push_back({{"name", spec.name},
                      {"source", to_string(spec.source)},
                      {"analyzer", to_json(spec.analyzer)},
                      {"boost", spec.boost},
                      {"matching", spec.matching}});
  }
  json header = {{"format", kIndexFormat},
                 {"version", kIndexVersion},
                 {"doc_count", index.doc_count()},
                 {"bm25", {{"k1", config.bm25.k1}, {"b", config.bm25.b}}},
                 {"fields", std::move(fields)}};
  out << header.dump() << '\n';

  for (std::uint32_t d = 0; d < index.doc_count(); ++d) {
    out << json{{"doc", index.doc_id(d)}, {"title", index.title(d)}, {"chunk_lengths", index.chunk_lengths(d)}}.dump()
        << '\n';
  }
  for (const auto& field : index.fields()) {
    std::vector<std::uint32_t> lengths(field.doc_slots());
    for (std::uint32_t d = 0; d < lengths.size(); ++d) lengths[d] = field.doc_length(d);
    out << json{{"field", field.name()}, {"doc_lengths", lengths}}.dump() << '\n';
    for (const auto& term : field.sorted_terms()) {
      const auto* p = field.postings(term);
      std::vector<std::uint32_t> tfs(p->tfs.begin(), p->tfs.end());
      out << json{{"field", field.name()}, {"term", term}, {"docs", p->docs}, {"tfs", tfs}}.dump() << '\n';
    }
  }
}

void save_index(const IndexSet& index, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::file_not_found, "cannot write " + path.string());
  write_index(index, out);
  if (!out) throw Error(Errc::invalid_argument, "failed writing " + path.string());
}

IndexSet read_index(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> std::optional<json> {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        return json::parse(line);
      } catch (const json::exception& e) {
        throw Error(Errc::parse_error, e.what(), line_no);
      }
    }
    return std::nullopt;
  };

  try {
    auto header = next();
    if (!header || header->value("format", "") != kIndexFormat) {
      throw Error(Errc::parse_error, "not a funnel index file", line_no);
    }
    const auto version = header->at("version").get<std::string>();
    if (!version.starts_with("1.")) throw Error(Errc::parse_error, "unsupported index version " + version, line_no);

    IndexConfig config;
    config.bm25 = {header->at("bm25").at("k1").get<double>(), header->at("bm25").at("b").get<double>()};
    for (const auto& f : header->at("fields")) {
      config.fields.push_back({f.at("name").get<std::string>(), parse_source_text(f.at("source").get<std::string>()),
                               analyzer_from_json(f.at("analyzer")), f.at("boost").get<double>(),
                               f.at("matching").get<bool>()});
    }
    const auto doc_count = header->at("doc_count").get<std::size_t>();

    std::vector<std::string> ids;
    std::vector<std::string> titles;
    std::vector<std::vector<std::uint32_t>> chunk_lengths;
    for (std::size_t d = 0; d < doc_count; ++d) {
      auto rec = next();
      if (!rec || !rec->contains("doc")) throw Error(Errc::parse_error, "expected document record", line_no);
      ids.push_back(rec->at("doc").get<std::string>());
      titles.push_back(rec->at("title").get<std::string>());
      chunk_lengths.push_back(rec->at("chunk_lengths").get<std::vector<std::uint32_t>>());
    }

    std::vector<FieldIndex> fields;
    for (const auto& spec : config.fields) fields.emplace_back(spec.name, spec.analyzer, doc_count);
    std::size_t current = 0;
    while (auto rec = next()) {
      const auto name = rec->at("field").get<std::string>();
      while (current < fields.size() && fields[current].name() != name) ++current;
      if (current == fields.size()) throw Error(Errc::parse_error, "unexpected field '" + name + "'", line_no);
      FieldIndex& field = fields[current];
      if (rec->contains("doc_lengths")) {
        const auto lengths = rec->at("doc_lengths").get<std::vector<std::uint32_t>>();
        if (lengths.size() != doc_count) throw Error(Errc::parse_error, "doc_lengths size mismatch", line_no);
        for (std::uint32_t d = 0; d < doc_count; ++d) field.set_doc_length(d, lengths[d]);
        continue;
      }
      const auto term = rec->at("term").get<std::string>();
      const auto docs = rec->at("docs").get<std::vector<std::uint32_t>>();
      const auto tfs = rec->at("tfs").get<std::vector<std::uint32_t>>();
      if (docs.size() != tfs.size()) throw Error(Errc::parse_error, "postings size mismatch", line_no);
      for (std::size_t i = 0; i < docs.size(); ++i) {
        if (docs[i] >= doc_count) throw Error(Errc::parse_error, "posting doc out of range", line_no);
        field.add_posting(term, docs[i], tfs[i]);
      }
    }
    for (auto& f : fields) f.finish(config.bm25);
    return IndexSet(std::move(config), std::move(ids), std::move(titles), std::move(chunk_lengths),
                    std::move(fields));
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, e.what(), line_no);
  } catch (const Error& e) {
    if (e.code() == Errc::parse_error) throw;
    throw Error(Errc::parse_error, e.detail(), line_no);
  }
}

IndexSet load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::file_not_found, path.string());
  return read_index(in);
}

}  // namespace funnel
