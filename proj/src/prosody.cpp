#include "ipg/prosody.hpp"

#include <fstream>
#include <sstream>

#include "ipg/utf8.hpp"

namespace ipg::prosody {

void Poem::validate() const {
  if (static_cast<int>(lines.size()) != kLineCount)
    throw InputError("poem must have exactly 4 lines, got " + std::to_string(lines.size()));
  if (line_len != 5 && line_len != 7)
    throw InputError("line_len must be 5 or 7, got " + std::to_string(line_len));
  for (size_t i = 0; i < lines.size(); ++i) {
    if (static_cast<int>(lines[i].size()) != line_len)
      throw InputError("line " + std::to_string(i + 1) + " has " +
                       std::to_string(lines[i].size()) + " characters, expected " +
                       std::to_string(line_len));
    for (const auto& ch : lines[i])
      if (ch.empty()) throw InputError("empty character token in line " + std::to_string(i + 1));
  }
}

std::vector<std::string> Poem::line_strings() const {
  std::vector<std::string> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(utf8::join(l));
  return out;
}

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

// Splits a TSV row into exactly two fields; returns false for comments/blanks.
bool tsv_row(const std::string& line, std::string& a, std::string& b) {
  if (line.empty() || line[0] == '#') return false;
  auto tab = line.find('\t');
  if (tab == std::string::npos) throw InputError("expected TAB-separated row: " + line);
  a = line.substr(0, tab);
  b = line.substr(tab + 1);
  if (a.empty() || b.empty()) throw InputError("empty field in row: " + line);
  return true;
}

}  // namespace

ToneDict ToneDict::load(const std::string& path) {
  ToneDict d;
  for (const auto& line : read_lines(path)) {
    std::string ch, t;
    if (!tsv_row(line, ch, t)) continue;
    if (utf8::length(ch) != 1) throw InputError("tone entry is not one character: " + ch);
    if (t == "P")
      d.set(ch, Tone::Ping);
    else if (t == "Z")
      d.set(ch, Tone::Ze);
    else if (t == "B")
      d.set(ch, Tone::Either);
    else
      throw InputError("tone must be P, Z or B, got '" + t + "' in " + path);
  }
  return d;
}

RhymeDict RhymeDict::load(const std::string& path) {
  RhymeDict d;
  for (const auto& line : read_lines(path)) {
    std::string ch, group;
    if (!tsv_row(line, ch, group)) continue;
    if (utf8::length(ch) != 1) throw InputError("rhyme entry is not one character: " + ch);
    d.set(ch, group);
  }
  return d;
}

TonalPattern TonalPattern::load(const std::string& path) {
  TonalPattern p;
  for (const auto& line : read_lines(path)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<ToneReq> row;
    for (char c : line) {
      switch (c) {
        case 'P': row.push_back(ToneReq::Ping); break;
        case 'Z': row.push_back(ToneReq::Ze); break;
        case '.': row.push_back(ToneReq::Any); break;
        default: throw InputError(std::string("pattern character must be P, Z or ., got '") + c + "'");
      }
    }
    p.rows.push_back(std::move(row));
  }
  if (p.rows.size() != kLineCount)
    throw InputError("pattern file must have 4 rows, got " + std::to_string(p.rows.size()));
  for (const auto& r : p.rows)
    if (r.size() != p.rows[0].size()) throw InputError("pattern rows have unequal lengths");
  return p;
}

bool check_rhyme(const Poem& poem, const RhymeDict& dict) {
  poem.validate();
  // Rhyming positions: last characters of lines 1, 2, 4 (1-indexed).
  const std::string g1 = dict.group(poem.lines[0].back());
  const std::string g2 = dict.group(poem.lines[1].back());
  const std::string g4 = dict.group(poem.lines[3].back());
  if (g1.empty() || g2.empty() || g4.empty()) return false;
  return g1 == g2 && g1 == g4;
}

ProsodyReport check_tones(const Poem& poem, const TonalPattern& pattern, const ToneDict& dict) {
  poem.validate();
  if (static_cast<int>(pattern.rows.size()) != kLineCount || pattern.line_len() != poem.line_len)
    throw InputError("tonal pattern dimensions do not match the poem");

  ProsodyReport report;
  report.rhyme_ok = true;  // rhyme is not this op's concern; callers combine
  for (int i = 0; i < kLineCount; ++i) {
    for (int j = 0; j < poem.line_len; ++j) {
      Tone t = dict.tone(poem.lines[i][j]);
      if (t == Tone::Unknown) ++report.unknown_count;
      ToneReq req = pattern.rows[i][j];
      if (req == ToneReq::Any || t == Tone::Either || t == Tone::Unknown) continue;
      if ((req == ToneReq::Ping && t == Tone::Ze) || (req == ToneReq::Ze && t == Tone::Ping))
        report.tone_violations.push_back({i, j, req, t});
    }
  }
  return report;
}

ProsodyReport analyze(const Poem& poem, const TonalPattern& pattern, const ToneDict& tones,
                      const RhymeDict& rhymes) {
  ProsodyReport report = check_tones(poem, pattern, tones);
  report.rhyme_ok = check_rhyme(poem, rhymes);
  return report;
}

double prosody_score(const ProsodyReport& report) {
  double s = report.rhyme_ok ? 1.0 : 0.5;
  return s / (1.0 + static_cast<double>(report.tone_violations.size()));
}

const char* tone_name(Tone t) {
  switch (t) {
    case Tone::Ping: return "Ping";
    case Tone::Ze: return "Ze";
    case Tone::Either: return "Either";
    default: return "Unknown";
  }
}

const char* tone_req_name(ToneReq t) {
  switch (t) {
    case ToneReq::Ping: return "Ping";
    case ToneReq::Ze: return "Ze";
    default: return "Any";
  }
}

}  // namespace ipg::prosody
