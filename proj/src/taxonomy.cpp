#include "ipg/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "ipg/prosody.hpp"
#include "ipg/utf8.hpp"

namespace ipg::taxonomy {

void PhraseTaxonomy::add(const std::string& keyword, const std::string& theme,
                         const std::vector<std::string>& phrases) {
  if (keyword.empty() || theme.empty()) throw InputError("taxonomy keyword/theme cannot be empty");
  if (theme_phrases_.find(theme) == theme_phrases_.end()) themes_order_.push_back(theme);
  auto& list = theme_phrases_[theme];
  for (const auto& p : phrases) {
    if (p.empty()) throw InputError("empty phrase under theme " + theme);
    if (std::find(list.begin(), list.end(), p) == list.end()) list.push_back(p);
  }
  auto& themes = keyword_themes_[keyword];
  if (std::find(themes.begin(), themes.end(), theme) == themes.end()) themes.push_back(theme);
}

std::vector<PhraseHit> PhraseTaxonomy::retrieve(const std::string& keyword) const {
  std::vector<PhraseHit> out;
  auto it = keyword_themes_.find(keyword);
  if (it == keyword_themes_.end()) return out;
  std::unordered_set<std::string> seen;
  for (const auto& theme : it->second) {
    for (const auto& phrase : theme_phrases_.at(theme)) {
      if (seen.insert(phrase).second) out.push_back({phrase, theme, keyword});
    }
  }
  return out;
}

PhraseTaxonomy PhraseTaxonomy::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open taxonomy file: " + path);
  PhraseTaxonomy tax;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto t1 = line.find('\t');
    auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw InputError(path + ":" + std::to_string(lineno) +
                       ": expected keyword<TAB>theme<TAB>phrases");
    std::string keyword = line.substr(0, t1);
    std::string theme = line.substr(t1 + 1, t2 - t1 - 1);
    std::vector<std::string> phrases;
    std::string rest = line.substr(t2 + 1);
    size_t pos = 0;
    while (pos <= rest.size()) {
      auto bar = rest.find('|', pos);
      std::string p = rest.substr(pos, bar == std::string::npos ? std::string::npos : bar - pos);
      if (!p.empty()) phrases.push_back(p);
      if (bar == std::string::npos) break;
      pos = bar + 1;
    }
    if (phrases.empty())
      throw InputError(path + ":" + std::to_string(lineno) + ": no phrases for theme " + theme);
    tax.add(keyword, theme, phrases);
  }
  return tax;
}

KeywordSet select_line_keywords(const imageinfo::ImageTags& tags, const PhraseTaxonomy& tax,
                                int line_len) {
  struct Candidate {
    PhraseHit hit;
    double confidence;
    size_t order;  // position in the retrieval stream, for tie-breaking
  };
  std::vector<Candidate> pool;
  size_t order = 0;
  for (const auto& t : tags.tags) {
    for (auto& hit : tax.retrieve(t.tag)) {
      if (static_cast<int>(utf8::length(hit.phrase)) > line_len) continue;
      pool.push_back({std::move(hit), t.confidence, order++});
    }
  }

  KeywordSet out;
  // Each (keyword, theme) pair may contribute one phrase, so a single tag
  // fills a single line. A theme repeats (via another keyword) only once no
  // fresh theme is left, and repetitions are score-penalized.
  std::unordered_set<std::string> dead_pairs;
  std::unordered_map<std::string, int> theme_uses;
  std::unordered_set<std::string> chosen_phrases;

  auto pair_key = [](const Candidate& c) { return c.hit.keyword + "\x1f" + c.hit.theme; };

  while (out.entries.size() < static_cast<size_t>(prosody::kLineCount)) {
    bool fresh_theme_left = false;
    for (const auto& c : pool)
      if (!dead_pairs.count(pair_key(c)) && !chosen_phrases.count(c.hit.phrase) &&
          theme_uses[c.hit.theme] == 0)
        fresh_theme_left = true;

    int best = -1;
    double best_score = 0.0;
    for (size_t i = 0; i < pool.size(); ++i) {
      if (dead_pairs.count(pair_key(pool[i])) || chosen_phrases.count(pool[i].hit.phrase))
        continue;
      int reps = theme_uses[pool[i].hit.theme];
      if (fresh_theme_left && reps > 0) continue;
      double score = pool[i].confidence / (1.0 + reps);
      if (best < 0 || score > best_score) {
        best = static_cast<int>(i);
        best_score = score;
      }
    }
    if (best < 0) break;
    dead_pairs.insert(pair_key(pool[best]));
    ++theme_uses[pool[best].hit.theme];
    chosen_phrases.insert(pool[best].hit.phrase);
    out.entries.push_back(pool[best].hit);
  }
  return out;
}

}  // namespace ipg::taxonomy
