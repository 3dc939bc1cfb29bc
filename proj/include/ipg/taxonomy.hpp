#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "ipg/error.hpp"
#include "ipg/imageinfo.hpp"

namespace ipg::taxonomy {

/// A classical phrase with its theme and the modern keyword it came from.
struct PhraseHit {
  std::string phrase;
  std::string theme;
  std::string keyword;
};

/// A per-line keyword assignment: up to 4 phrases, one per poem line, in
/// selection order. Empty entries mean the line gets no keyword.
struct KeywordSet {
  std::vector<PhraseHit> entries;  // size <= 4
};

/// Modern keyword -> themes -> classical phrases, the retrieval side of an
/// 18th-century phrase taxonomy. Loaded from TSV
/// `modern_keyword<TAB>theme<TAB>phrase1|phrase2|...`.
class PhraseTaxonomy {
 public:
  void add(const std::string& keyword, const std::string& theme,
           const std::vector<std::string>& phrases);

  /// Every phrase of every theme indexed by `keyword`, deduplicated, in
  /// original order. Unknown keywords give an empty list.
  std::vector<PhraseHit> retrieve(const std::string& keyword) const;

  size_t theme_count() const { return themes_order_.size(); }

  static PhraseTaxonomy load(const std::string& path);

 private:
  std::unordered_map<std::string, std::vector<std::string>> theme_phrases_;
  std::vector<std::string> themes_order_;
  std::unordered_map<std::string, std::vector<std::string>> keyword_themes_;
};

/// Chooses up to 4 phrases for the 4 lines. Candidates score
/// confidence / (1 + times the theme was already used); phrases longer than
/// line_len are excluded and a theme repeats only once all themes present in
/// the candidate pool have been used.
KeywordSet select_line_keywords(const imageinfo::ImageTags& tags, const PhraseTaxonomy& tax,
                                int line_len);

}  // namespace ipg::taxonomy
