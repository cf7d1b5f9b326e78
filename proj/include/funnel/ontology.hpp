#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace funnel {

struct OntologyEntry {
  std::string concept_id;
  std::string label;
  std::vector<std::string> synonyms;
  std::vector<std::string> hypernyms;  // concept ids
  std::vector<std::string> hyponyms;   // concept ids
};

struct DanglingReference {
  std::string concept_id;
  std::string missing_id;
  std::string relation;  // "hypernym" or "hyponym"
  std::size_t line = 0;
};

/// A surface form (label or synonym) as a lowercased word sequence.
struct Surface {
  std::vector<std::string> words;
  std::string concept_id;
  bool is_label = false;
};

/// Concepts with their relations and a surface-form lookup for the
/// gazetteer. Immutable after construction.
class Ontology {
 public:
  Ontology() = default;
  /// Drops relations to unknown ids, recording each in `dangling` if given.
  /// Throws ParseError on duplicate ids or blank labels.
  static Ontology from_entries(std::vector<OntologyEntry> entries, std::vector<DanglingReference>* dangling = nullptr);

  const OntologyEntry* find(std::string_view concept_id) const;
  const std::vector<OntologyEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  /// Surfaces whose first word is `word` (already lowercased).
  const std::vector<Surface>* surfaces_starting_with(std::string_view word) const;
  /// Concept ids whose lowercased label or synonym equals `text` (lowercased).
  std::vector<std::string> lookup(std::string_view text) const;

 private:
  std::vector<OntologyEntry> entries_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::vector<Surface>> by_first_word_;
};

struct OntologyLoad {
  Ontology ontology;
  std::vector<DanglingReference> warnings;
};

/// One JSON record per line: {id, label, synonyms, hypernyms, hyponyms}.
OntologyLoad read_ontology(std::istream& in);
OntologyLoad load_ontology(const std::filesystem::path& path);

/// verb -> synonyms, keys lowercased.
class VerbLexicon {
 public:
  void add(std::string verb, std::vector<std::string> synonyms);
  const std::vector<std::string>* find(std::string_view verb) const;
  std::size_t size() const noexcept { return entries_.size(); }
  const std::map<std::string, std::vector<std::string>, std::less<>>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> entries_;
};

/// Tab-separated `verb<TAB>syn1,syn2,...`; blank lines and `#` comments skipped.
VerbLexicon read_verb_lexicon(std::istream& in);
VerbLexicon load_verb_lexicon(const std::filesystem::path& path);

}  // namespace funnel
