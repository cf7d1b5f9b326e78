#include "funnel/ontology.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "funnel/error.hpp"
#include "funnel/text.hpp"

namespace funnel {

namespace {

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : segment_words(text)) out.push_back(std::move(t.text));
  return out;
}

}  // namespace

Ontology Ontology::from_entries(std::vector<OntologyEntry> entries, std::vector<DanglingReference>* dangling) {
  Ontology o;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].concept_id.empty()) throw Error(Errc::parse_error, "concept without id", i + 1);
    if (trim(entries[i].label).empty()) throw Error(Errc::parse_error, "concept '" + entries[i].concept_id + "' has no label", i + 1);
    if (!o.by_id_.emplace(entries[i].concept_id, i).second) {
      throw Error(Errc::parse_error, "duplicate concept id '" + entries[i].concept_id + "'", i + 1);
    }
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto prune = [&](std::vector<std::string>& ids, const char* relation) {
      std::erase_if(ids, [&](const std::string& id) {
        if (o.by_id_.contains(id)) return false;
        if (dangling != nullptr) dangling->push_back({entries[i].concept_id, id, relation, i + 1});
        return true;
      });
    };
    prune(entries[i].hypernyms, "hypernym");
    prune(entries[i].hyponyms, "hyponym");
  }
  o.entries_ = std::move(entries);

  for (const auto& e : o.entries_) {
    auto add_surface = [&](std::string_view text, bool is_label) {
      auto words = words_of(text);
      if (words.empty()) return;
      auto& bucket = o.by_first_word_[words.front()];
      bucket.push_back({std::move(words), e.concept_id, is_label});
    };
    add_surface(e.label, true);
    for (const auto& s : e.synonyms) add_surface(s, false);
  }
  return o;
}

const OntologyEntry* Ontology::find(std::string_view concept_id) const {
  auto it = by_id_.find(std::string(concept_id));
  return it == by_id_.end() ? nullptr : &entries_[it->second];
}

const std::vector<Surface>* Ontology::surfaces_starting_with(std::string_view word) const {
  auto it = by_first_word_.find(std::string(word));
  return it == by_first_word_.end() ? nullptr : &it->second;
}

std::vector<std::string> Ontology::lookup(std::string_view text) const {
  const auto words = words_of(text);
  std::set<std::string> ids;
  if (words.empty()) return {};
  if (const auto* bucket = surfaces_starting_with(words.front())) {
    for (const auto& s : *bucket) {
      if (s.words == words) ids.insert(s.concept_id);
    }
  }
  return {ids.begin(), ids.end()};
}

OntologyLoad read_ontology(std::istream& in) {
  std::vector<OntologyEntry> entries;
  std::vector<std::size_t> lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      OntologyEntry e;
      e.concept_id = j.at("id").get<std::string>();
      e.label = j.at("label").get<std::string>();
      e.synonyms = j.value("synonyms", std::vector<std::string>{});
      e.hypernyms = j.value("hypernyms", std::vector<std::string>{});
      e.hyponyms = j.value("hyponyms", std::vector<std::string>{});
      entries.push_back(std::move(e));
      lines.push_back(line_no);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::parse_error, e.what(), line_no);
    }
  }

  OntologyLoad result;
  try {
    result.ontology = Ontology::from_entries(std::move(entries), &result.warnings);
  } catch (const Error& e) {
    // from_entries counts records; report the file line instead.
    const auto idx = e.line().value_or(1) - 1;
    throw Error(e.code(), e.detail(), idx < lines.size() ? lines[idx] : line_no);
  }
  for (auto& w : result.warnings) w.line = lines[w.line - 1];
  return result;
}

OntologyLoad load_ontology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::file_not_found, path.string());
  return read_ontology(in);
}

void VerbLexicon::add(std::string verb, std::vector<std::string> synonyms) {
  auto& slot = entries_[to_lower_ascii(trim(verb))];
  for (auto& s : synonyms) {
    std::string syn(trim(s));
    if (syn.empty() || std::find(slot.begin(), slot.end(), syn) != slot.end()) continue;
    slot.push_back(std::move(syn));
  }
}

const std::vector<std::string>* VerbLexicon::find(std::string_view verb) const {
  auto it = entries_.find(verb);
  return it == entries_.end() ? nullptr : &it->second;
}

VerbLexicon read_verb_lexicon(std::istream& in) {
  VerbLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto tab = t.find('\t');
    if (tab == std::string_view::npos || trim(t.substr(0, tab)).empty()) {
      throw Error(Errc::parse_error, "expected verb<TAB>synonyms", line_no);
    }
    std::vector<std::string> syns;
    std::string_view rest = t.substr(tab + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      syns.emplace_back(trim(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    lex.add(std::string(t.substr(0, tab)), std::move(syns));
  }
  return lex;
}

VerbLexicon load_verb_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::file_not_found, path.string());
  return read_verb_lexicon(in);
}

}  // namespace funnel
