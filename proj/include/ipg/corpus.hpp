#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ipg/labels.hpp"
#include "ipg/prosody.hpp"

namespace ipg::corpus {

using prosody::Poem;

/// Dense token <-> id bijection with six reserved tokens at the lowest ids.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kMask = 3;
  static constexpr int kLineSep = 4;
  static constexpr int kUnk = 5;
  static constexpr int kNumReserved = 6;

  Vocabulary();

  /// Adds a token if absent; returns its id either way.
  int add(const std::string& token);
  /// Id of a token, kUnk when absent.
  int id(const std::string& token) const;
  bool contains(const std::string& token) const { return ids_.count(token) > 0; }
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  static bool is_special(int id) { return id < kNumReserved; }

  /// One token per line, line number == id, reserved tokens first.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct PoemRecord {
  std::string id;
  Poem poem;
  AbstractLabels labels;
};

/// One fill-in-the-blank training example. The input is the previous lines
/// joined by LINE_SEP followed by the current line with everything outside
/// kept_span replaced by one MASK per character.
struct MaskedSample {
  std::vector<int> input_ids;
  std::vector<int> target_ids;
  int line_index = 1;  // 1..4
  int kept_start = 0;
  int kept_len = 0;  // 0 = fully masked line
};

struct TrainingSample {
  MaskedSample masked;
  AbstractLabels labels;
};

/// Multi-character word list for greedy longest-match segmentation.
class SegmentLexicon {
 public:
  void add(const std::string& word);  // throws InputError on empty words
  bool contains(const std::string& word) const { return words_.count(word) > 0; }
  size_t max_len() const { return max_len_; }
  size_t size() const { return words_.size(); }

  /// One word per line, `#` comments ignored.
  static SegmentLexicon load(const std::string& path);

 private:
  std::unordered_set<std::string> words_;
  size_t max_len_ = 0;
};

struct Span {
  int start = 0;
  int len = 0;
  bool operator==(const Span&) const = default;
};

/// Representative-word tables: per aspect, per category, a list of words
/// whose presence votes for that category.
class RuleClassifier {
 public:
  void add_word(Aspect aspect, const std::string& category, const std::string& word);
  bool empty() const;

  /// Number of occurrences-based hits for each category of `aspect`.
  std::vector<int> category_hits(Aspect aspect, const Poem& poem) const;

  /// JSON {"season": {"spring": [words...], ...}, "time": {...}, "weather": {...}}.
  static RuleClassifier load(const std::string& path);

 private:
  // aspect -> category index -> words
  std::array<std::map<int, std::vector<std::string>>, kNumAspects> words_;
};

/// Builds a vocabulary over every character in the records plus the reserved
/// tokens. Ids follow first occurrence order. Throws InputError when empty.
Vocabulary build_vocab(const std::vector<PoemRecord>& records);

/// Greedy longest-match segmentation; characters that start no lexicon match
/// become single-character words. Spans partition the line.
std::vector<Span> segment_line(const std::vector<std::string>& line, const SegmentLexicon& lexicon);

/// One sample per segmented word per line (kept span = the word) plus one
/// fully-masked sample per line.
std::vector<MaskedSample> make_masked_samples(const PoemRecord& record,
                                              const SegmentLexicon& lexicon,
                                              const Vocabulary& vocab);

/// Per aspect, the category with the strictly largest representative-word hit
/// count (>= 1); ties and zero hits give "other".
AbstractLabels label_poem(const Poem& poem, const RuleClassifier& rules);

struct SplitResult {
  std::vector<PoemRecord> train, valid, test;
};

/// Deterministic seeded shuffle, then a cumulative-rounding partition whose
/// sizes are within one of the exact proportions. Throws InputError when
/// fewer than 3 records or the ratios do not sum to 1.
SplitResult split_corpus(const std::vector<PoemRecord>& records,
                         std::array<double, 3> ratios, uint64_t seed);

/// JSON Lines {"id", "lines": [4 strings], "season", "time", "weather"};
/// label fields optional, defaulting to "other".
std::vector<PoemRecord> load_poems(const std::string& path);
void save_poems(const std::vector<PoemRecord>& records, const std::string& path);

/// JSON Lines cache rows
/// {"input": [ids], "target": [ids], "line": int, "kept": [start, len], "labels": [3 ints]}.
void save_samples(const std::vector<TrainingSample>& samples, const std::string& path);
std::vector<TrainingSample> load_samples(const std::string& path);

}  // namespace ipg::corpus
