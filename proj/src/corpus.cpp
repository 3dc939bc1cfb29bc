#include "ipg/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "ipg/rng.hpp"
#include "ipg/utf8.hpp"

namespace ipg::corpus {

using nlohmann::json;

namespace {

const std::array<std::string, Vocabulary::kNumReserved> kReservedTokens = {
    "<PAD>", "<BOS>", "<EOS>", "<MASK>", "<SEP>", "<UNK>"};

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path);
  return in;
}

}  // namespace

Vocabulary::Vocabulary() {
  for (const auto& t : kReservedTokens) {
    ids_[t] = static_cast<int>(tokens_.size());
    tokens_.push_back(t);
  }
}

int Vocabulary::add(const std::string& token) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  int id = static_cast<int>(tokens_.size());
  ids_[token] = id;
  tokens_.push_back(token);
  return id;
}

int Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw Error("token id out of range: " + std::to_string(id));
  return tokens_[id];
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + path);
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  auto in = open_or_throw(path);
  Vocabulary v;
  std::string line;
  int idx = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (idx < kNumReserved) {
      if (line != kReservedTokens[idx])
        throw InputError("vocabulary file " + path + " lacks reserved token " +
                         kReservedTokens[idx] + " at line " + std::to_string(idx + 1));
    } else {
      if (line.empty()) throw InputError("empty token at line " + std::to_string(idx + 1));
      v.add(line);
    }
    ++idx;
  }
  if (idx < kNumReserved) throw InputError("vocabulary file too short: " + path);
  return v;
}

void SegmentLexicon::add(const std::string& word) {
  size_t len = utf8::length(word);
  if (len == 0) throw InputError("empty lexicon word");
  words_.insert(word);
  max_len_ = std::max(max_len_, len);
}

SegmentLexicon SegmentLexicon::load(const std::string& path) {
  auto in = open_or_throw(path);
  SegmentLexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    lex.add(line);
  }
  return lex;
}

void RuleClassifier::add_word(Aspect aspect, const std::string& category,
                              const std::string& word) {
  const auto& cats = aspect_categories(aspect);
  auto it = std::find(cats.begin(), cats.end(), category);
  if (it == cats.end())
    throw InputError(std::string("unknown ") + aspect_name(aspect) + " category: " + category);
  int idx = static_cast<int>(it - cats.begin());
  if (idx == static_cast<int>(cats.size()) - 1)
    throw InputError("representative words cannot target the 'other' category");
  words_[static_cast<int>(aspect)][idx].push_back(word);
}

bool RuleClassifier::empty() const {
  for (const auto& m : words_)
    if (!m.empty()) return false;
  return true;
}

std::vector<int> RuleClassifier::category_hits(Aspect aspect, const Poem& poem) const {
  const auto& cats = aspect_categories(aspect);
  std::vector<int> hits(cats.size(), 0);
  std::string text;
  for (const auto& line : poem.lines) text += utf8::join(line);
  for (const auto& [cat, words] : words_[static_cast<int>(aspect)]) {
    for (const auto& w : words) {
      size_t pos = 0;
      while ((pos = text.find(w, pos)) != std::string::npos) {
        ++hits[cat];
        pos += w.size();
      }
    }
  }
  return hits;
}

RuleClassifier RuleClassifier::load(const std::string& path) {
  auto in = open_or_throw(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("malformed rules JSON " + path + ": " + e.what());
  }
  if (!j.is_object()) throw InputError("rules JSON must be an object");
  RuleClassifier rules;
  for (auto aspect : kAspects) {
    auto it = j.find(aspect_name(aspect));
    if (it == j.end()) continue;
    if (!it->is_object())
      throw InputError(std::string("rules entry for ") + aspect_name(aspect) +
                       " must be an object");
    for (auto& [cat, words] : it->items()) {
      if (!words.is_array())
        throw InputError("rules category " + cat + " must hold an array of words");
      for (const auto& w : words) rules.add_word(aspect, cat, w.get<std::string>());
    }
  }
  return rules;
}

Vocabulary build_vocab(const std::vector<PoemRecord>& records) {
  if (records.empty()) throw InputError("cannot build a vocabulary from an empty corpus");
  Vocabulary v;
  for (const auto& rec : records) {
    rec.poem.validate();
    for (const auto& line : rec.poem.lines)
      for (const auto& ch : line) v.add(ch);
  }
  return v;
}

std::vector<Span> segment_line(const std::vector<std::string>& line,
                               const SegmentLexicon& lexicon) {
  std::vector<Span> spans;
  int n = static_cast<int>(line.size());
  int i = 0;
  while (i < n) {
    int best = 1;
    int limit = std::min<int>(static_cast<int>(lexicon.max_len()), n - i);
    for (int len = limit; len >= 2; --len) {
      std::string cand;
      for (int k = 0; k < len; ++k) cand += line[i + k];
      if (lexicon.contains(cand)) {
        best = len;
        break;
      }
    }
    spans.push_back({i, best});
    i += best;
  }
  return spans;
}

std::vector<MaskedSample> make_masked_samples(const PoemRecord& record,
                                              const SegmentLexicon& lexicon,
                                              const Vocabulary& vocab) {
  record.poem.validate();
  const auto& lines = record.poem.lines;

  // Previous lines joined by LINE_SEP; the masked line is appended after one
  // more LINE_SEP so line boundaries stay explicit.
  std::vector<MaskedSample> samples;
  std::vector<int> prefix;
  for (int i = 0; i < prosody::kLineCount; ++i) {
    std::vector<int> target;
    target.reserve(lines[i].size());
    for (const auto& ch : lines[i]) target.push_back(vocab.id(ch));

    auto emit = [&](Span kept) {
      MaskedSample s;
      s.line_index = i + 1;
      s.kept_start = kept.start;
      s.kept_len = kept.len;
      s.input_ids = prefix;
      if (!prefix.empty()) s.input_ids.push_back(Vocabulary::kLineSep);
      for (int j = 0; j < static_cast<int>(target.size()); ++j) {
        bool in_kept = j >= kept.start && j < kept.start + kept.len;
        s.input_ids.push_back(in_kept ? target[j] : Vocabulary::kMask);
      }
      s.target_ids = target;
      samples.push_back(std::move(s));
    };

    for (const Span& w : segment_line(lines[i], lexicon)) emit(w);
    emit({0, 0});  // fully masked, supports keyword-less lines at inference

    if (!prefix.empty()) prefix.push_back(Vocabulary::kLineSep);
    prefix.insert(prefix.end(), target.begin(), target.end());
  }
  return samples;
}

AbstractLabels label_poem(const Poem& poem, const RuleClassifier& rules) {
  AbstractLabels labels;
  for (auto aspect : kAspects) {
    auto hits = rules.category_hits(aspect, poem);
    int best = -1, best_hits = 0;
    bool tie = false;
    // The "other" slot never receives votes; skip it.
    for (int c = 0; c + 1 < static_cast<int>(hits.size()); ++c) {
      if (hits[c] > best_hits) {
        best = c;
        best_hits = hits[c];
        tie = false;
      } else if (hits[c] == best_hits && hits[c] > 0) {
        tie = true;
      }
    }
    if (best >= 0 && best_hits >= 1 && !tie)
      labels.set(aspect, best);
    else
      labels.set_other(aspect);
  }
  return labels;
}

SplitResult split_corpus(const std::vector<PoemRecord>& records, std::array<double, 3> ratios,
                         uint64_t seed) {
  if (records.size() < 3) throw InputError("need at least 3 records to split");
  double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9) throw InputError("split ratios must sum to 1");

  std::vector<size_t> order(records.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  double n = static_cast<double>(records.size());
  size_t c1 = static_cast<size_t>(std::llround(n * ratios[0]));
  size_t c2 = static_cast<size_t>(std::llround(n * (ratios[0] + ratios[1])));
  c1 = std::min(c1, records.size());
  c2 = std::clamp(c2, c1, records.size());

  SplitResult out;
  for (size_t k = 0; k < order.size(); ++k) {
    const auto& rec = records[order[k]];
    if (k < c1)
      out.train.push_back(rec);
    else if (k < c2)
      out.valid.push_back(rec);
    else
      out.test.push_back(rec);
  }
  return out;
}

std::vector<PoemRecord> load_poems(const std::string& path) {
  auto in = open_or_throw(path);
  std::vector<PoemRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw InputError(path + ":" + std::to_string(lineno) + ": malformed JSON: " + e.what());
    }
    PoemRecord rec;
    try {
      rec.id = j.value("id", "poem-" + std::to_string(lineno));
      if (!j.contains("lines") || !j["lines"].is_array() || j["lines"].size() != 4)
        throw InputError("field 'lines' must be an array of 4 strings");
      for (const auto& l : j["lines"]) rec.poem.lines.push_back(utf8::chars(l.get<std::string>()));
      rec.poem.line_len = static_cast<int>(rec.poem.lines[0].size());
      rec.poem.validate();
      rec.labels.set(Aspect::Season, j.value("season", std::string("other")));
      rec.labels.set(Aspect::Time, j.value("time", std::string("other")));
      rec.labels.set(Aspect::Weather, j.value("weather", std::string("other")));
    } catch (const Error& e) {
      throw InputError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void save_poems(const std::vector<PoemRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + path);
  for (const auto& rec : records) {
    json j;
    j["id"] = rec.id;
    j["lines"] = rec.poem.line_strings();
    j["season"] = rec.labels.name(Aspect::Season);
    j["time"] = rec.labels.name(Aspect::Time);
    j["weather"] = rec.labels.name(Aspect::Weather);
    out << j.dump() << '\n';
  }
}

void save_samples(const std::vector<TrainingSample>& samples, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file: " + path);
  for (const auto& s : samples) {
    json j;
    j["input"] = s.masked.input_ids;
    j["target"] = s.masked.target_ids;
    j["line"] = s.masked.line_index;
    j["kept"] = {s.masked.kept_start, s.masked.kept_len};
    j["labels"] = {s.labels.of(Aspect::Season), s.labels.of(Aspect::Time),
                   s.labels.of(Aspect::Weather)};
    out << j.dump() << '\n';
  }
}

std::vector<TrainingSample> load_samples(const std::string& path) {
  auto in = open_or_throw(path);
  std::vector<TrainingSample> samples;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      TrainingSample s;
      s.masked.input_ids = j.at("input").get<std::vector<int>>();
      s.masked.target_ids = j.at("target").get<std::vector<int>>();
      s.masked.line_index = j.at("line").get<int>();
      auto kept = j.at("kept");
      s.masked.kept_start = kept.at(0).get<int>();
      s.masked.kept_len = kept.at(1).get<int>();
      auto labels = j.at("labels");
      s.labels.set(Aspect::Season, labels.at(0).get<int>());
      s.labels.set(Aspect::Time, labels.at(1).get<int>());
      s.labels.set(Aspect::Weather, labels.at(2).get<int>());
      samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw InputError(path + ":" + std::to_string(lineno) + ": malformed sample: " + e.what());
    }
  }
  return samples;
}

}  // namespace ipg::corpus
