#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "ipg/error.hpp"

namespace ipg::prosody {

constexpr int kLineCount = 4;

/// A quatrain: exactly four lines of `line_len` character tokens each.
struct Poem {
  std::vector<std::vector<std::string>> lines;  // 4 lines of UTF-8 character tokens
  int line_len = 5;                             // 5 or 7

  /// Throws InputError if the structural invariants do not hold.
  void validate() const;

  /// One string per line, characters joined.
  std::vector<std::string> line_strings() const;
};

enum class Tone { Ping, Ze, Either, Unknown };

/// Character -> tone. Lookups of unmapped characters yield Unknown.
class ToneDict {
 public:
  void set(const std::string& ch, Tone t) { map_[ch] = t; }
  Tone tone(const std::string& ch) const {
    auto it = map_.find(ch);
    return it == map_.end() ? Tone::Unknown : it->second;
  }
  size_t size() const { return map_.size(); }

  /// TSV `char<TAB>P|Z|B`, `#` comment lines ignored.
  static ToneDict load(const std::string& path);

 private:
  std::unordered_map<std::string, Tone> map_;
};

/// Character -> rhyme group id. Two characters rhyme iff groups are equal;
/// unmapped characters rhyme with nothing.
class RhymeDict {
 public:
  void set(const std::string& ch, const std::string& group) { map_[ch] = group; }
  /// Empty string when unmapped.
  std::string group(const std::string& ch) const {
    auto it = map_.find(ch);
    return it == map_.end() ? std::string() : it->second;
  }
  size_t size() const { return map_.size(); }

  /// TSV `char<TAB>group_id`, `#` comment lines ignored.
  static RhymeDict load(const std::string& path);

 private:
  std::unordered_map<std::string, std::string> map_;
};

enum class ToneReq { Ping, Ze, Any };

/// Per-line required tones; dimensions must match the poem being checked.
struct TonalPattern {
  std::vector<std::vector<ToneReq>> rows;  // 4 rows of line_len requirements

  int line_len() const { return rows.empty() ? 0 : static_cast<int>(rows[0].size()); }

  /// 4 text lines of `P|Z|.` characters.
  static TonalPattern load(const std::string& path);
};

struct ToneViolation {
  int line;       // 0-based
  int pos;        // 0-based character index
  ToneReq expected;
  Tone found;
  bool operator==(const ToneViolation&) const = default;
};

struct ProsodyReport {
  bool rhyme_ok = false;
  std::vector<ToneViolation> tone_violations;
  int unknown_count = 0;  // positions whose tone is Unknown

  bool conformant() const { return rhyme_ok && tone_violations.empty(); }
};

/// True iff the last characters of lines 1, 2 and 4 are all mapped and share
/// one rhyme group.
bool check_rhyme(const Poem& poem, const RhymeDict& dict);

/// Lists every position where a Ping/Ze requirement meets the opposite
/// definite tone. Either/Unknown tones and Any slots never violate.
/// Throws InputError when pattern dimensions do not match the poem.
ProsodyReport check_tones(const Poem& poem, const TonalPattern& pattern, const ToneDict& dict);

/// check_tones + check_rhyme in one report.
ProsodyReport analyze(const Poem& poem, const TonalPattern& pattern, const ToneDict& tones,
                      const RhymeDict& rhymes);

/// Ranking score in [0,1]; 1 exactly for a fully conformant report,
/// strictly decreasing in the violation count.
double prosody_score(const ProsodyReport& report);

const char* tone_name(Tone t);
const char* tone_req_name(ToneReq t);

}  // namespace ipg::prosody
