#include "ipg/decode.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "ipg/utf8.hpp"

namespace ipg::decode {

using corpus::Vocabulary;

const char* form_name(Form f) {
  switch (f) {
    case Form::Front: return "front";
    case Form::Middle: return "middle";
    default: return "back";
  }
}

std::vector<PlacementTemplate> enumerate_placements(const std::vector<int>& keyword_ids,
                                                    int line_len) {
  const int klen = static_cast<int>(keyword_ids.size());
  if (klen > line_len)
    throw InputError("keyword of length " + std::to_string(klen) +
                     " does not fit a line of length " + std::to_string(line_len));
  std::vector<PlacementTemplate> out;
  if (klen == 0) {
    PlacementTemplate tpl;
    tpl.masked_line.assign(line_len, Vocabulary::kMask);
    out.push_back(std::move(tpl));
    return out;
  }
  for (int off = 0; off + klen <= line_len; ++off) {
    PlacementTemplate tpl;
    tpl.offset = off;
    tpl.form = off == 0 ? Form::Front : (off + klen == line_len ? Form::Back : Form::Middle);
    tpl.masked_line.assign(line_len, Vocabulary::kMask);
    for (int k = 0; k < klen; ++k) {
      tpl.masked_line[off + k] = keyword_ids[k];
      tpl.forced.emplace_back(off + k, keyword_ids[k]);
    }
    out.push_back(std::move(tpl));
  }
  return out;
}

namespace {

std::vector<int> build_encoder_input(const std::vector<std::vector<int>>& prefix_lines,
                                     const std::vector<int>& masked_line) {
  std::vector<int> input;
  for (const auto& line : prefix_lines) {
    input.insert(input.end(), line.begin(), line.end());
    input.push_back(Vocabulary::kLineSep);
  }
  input.insert(input.end(), masked_line.begin(), masked_line.end());
  return input;
}

}  // namespace

template <typename T>
std::vector<Candidate> constrained_beam_search(model::InfillModel<T>& m,
                                               const std::vector<std::vector<int>>& prefix_lines,
                                               const PlacementTemplate& tpl,
                                               const AbstractLabels& labels, int beam_size) {
  const int line_len = static_cast<int>(tpl.masked_line.size());
  const int vocab = m.config.vocab_size;
  if (beam_size < 1) throw InputError("beam size must be at least 1");

  auto enc = model::encode(m, build_encoder_input(prefix_lines, tpl.masked_line), labels);

  struct Hyp {
    std::vector<int> ids;
    double score = 0.0;
    std::vector<T> state;
  };
  std::vector<Hyp> beam;
  beam.push_back({{}, 0.0, enc.s0});

  std::vector<double> logprobs;
  for (int pos = 0; pos < line_len; ++pos) {
    const int forced = tpl.masked_line[pos] == Vocabulary::kMask ? -1 : tpl.masked_line[pos];

    // One decoder step per hypothesis; the state depends only on the previous
    // token, so expansions of one hypothesis share it.
    std::vector<Hyp> next;
    struct Expansion {
      size_t parent;
      int token;
      double score;
    };
    std::vector<Expansion> expansions;
    std::vector<std::vector<T>> new_states(beam.size());
    for (size_t b = 0; b < beam.size(); ++b) {
      const int prev = pos == 0 ? Vocabulary::kBos : beam[b].ids.back();
      new_states[b] = model::decode_step(m, enc, prev, beam[b].state, logprobs);
      if (forced >= 0) {
        expansions.push_back({b, forced, beam[b].score + logprobs[forced]});
      } else {
        for (int tok = Vocabulary::kNumReserved; tok < vocab; ++tok)
          expansions.push_back({b, tok, beam[b].score + logprobs[tok]});
      }
    }

    const size_t keep = std::min(static_cast<size_t>(beam_size), expansions.size());
    std::partial_sort(expansions.begin(), expansions.begin() + keep, expansions.end(),
                      [](const Expansion& a, const Expansion& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.token != b.token) return a.token < b.token;
                        return a.parent < b.parent;
                      });
    next.reserve(keep);
    for (size_t k = 0; k < keep; ++k) {
      const auto& ex = expansions[k];
      Hyp h;
      h.ids = beam[ex.parent].ids;
      h.ids.push_back(ex.token);
      h.score = ex.score;
      h.state = new_states[ex.parent];
      next.push_back(std::move(h));
    }
    beam.swap(next);
  }

  std::sort(beam.begin(), beam.end(), [](const Hyp& a, const Hyp& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.ids < b.ids;
  });
  std::vector<Candidate> out;
  out.reserve(beam.size());
  for (auto& h : beam) out.push_back({std::move(h.ids), h.score, tpl.form, tpl.offset});
  return out;
}

double LineProsody::score(const std::vector<int>& ids) const {
  prosody::ProsodyReport report;
  const auto& row = pattern->rows[line_index];
  for (size_t j = 0; j < ids.size(); ++j) {
    prosody::Tone t = tones->tone(vocab->token(ids[j]));
    prosody::ToneReq req = row[j];
    if (req == prosody::ToneReq::Any || t == prosody::Tone::Either || t == prosody::Tone::Unknown)
      continue;
    if ((req == prosody::ToneReq::Ping && t == prosody::Tone::Ze) ||
        (req == prosody::ToneReq::Ze && t == prosody::Tone::Ping))
      report.tone_violations.push_back({line_index, static_cast<int>(j), req, t});
  }
  const std::string end_group = rhymes->group(vocab->token(ids.back()));
  switch (line_index) {
    case 0:
      // Line 1 sets the rhyme; prefer endings the dictionary can verify.
      report.rhyme_ok = !end_group.empty();
      break;
    case 1:
    case 3:
      report.rhyme_ok = !end_group.empty() && end_group == rhyme_group;
      break;
    default:
      report.rhyme_ok = true;  // line 3 carries no rhyme requirement
  }
  return prosody::prosody_score(report);
}

const Candidate& rank_candidates(const std::vector<Candidate>& candidates, int line_len,
                                 const LineProsody* pros) {
  if (candidates.empty()) throw Error("rank_candidates: no candidates");
  const Candidate* best = nullptr;
  double best_score = 0.0;
  for (const auto& c : candidates) {
    double s = c.logprob / static_cast<double>(line_len);
    if (pros) s += pros->weight * (pros->score(c.ids) - 1.0);
    if (!best || s > best_score ||
        (s == best_score && (c.form < best->form || (c.form == best->form && c.ids < best->ids)))) {
      best = &c;
      best_score = s;
    }
  }
  return *best;
}

template <typename T>
GenerationResult generate_poem(const GenerationRequest& req, model::InfillModel<T>& m,
                               const corpus::Vocabulary& vocab) {
  if (req.line_len != m.config.line_len)
    throw InputError("request line_len does not match the model config");
  GenerationResult result;
  result.poem.line_len = req.line_len;

  std::vector<std::vector<int>> committed;
  std::string rhyme_group;

  for (int i = 0; i < prosody::kLineCount; ++i) {
    std::vector<int> kw_ids;
    for (const auto& ch : utf8::chars(req.keywords[i])) {
      if (!vocab.contains(ch))
        throw InputError("keyword character not in vocabulary: " + ch);
      kw_ids.push_back(vocab.id(ch));
    }
    auto templates = enumerate_placements(kw_ids, req.line_len);

    std::vector<Candidate> all;
    for (const auto& tpl : templates) {
      auto cands = constrained_beam_search(m, committed, tpl, req.labels, req.beam_size);
      all.insert(all.end(), std::make_move_iterator(cands.begin()),
                 std::make_move_iterator(cands.end()));
    }

    LineProsody pros;
    const LineProsody* pros_ptr = nullptr;
    if (req.prosody) {
      pros.tones = &req.prosody->tones;
      pros.rhymes = &req.prosody->rhymes;
      pros.pattern = &req.prosody->pattern;
      pros.vocab = &vocab;
      pros.weight = req.prosody->weight;
      pros.line_index = i;
      pros.rhyme_group = rhyme_group;
      pros_ptr = &pros;
    }
    const Candidate& best = rank_candidates(all, req.line_len, pros_ptr);

    LineDiagnostics diag;
    diag.keyword = req.keywords[i];
    diag.form = kw_ids.empty() ? "none" : form_name(best.form);
    diag.offset = kw_ids.empty() ? 0 : best.offset;
    diag.score = best.logprob / static_cast<double>(req.line_len);
    diag.candidates = static_cast<int>(all.size());
    result.per_line.push_back(std::move(diag));

    std::vector<std::string> line_tokens;
    for (int id : best.ids) line_tokens.push_back(vocab.token(id));
    result.poem.lines.push_back(std::move(line_tokens));

    if (i == 0 && req.prosody)
      rhyme_group = req.prosody->rhymes.group(vocab.token(best.ids.back()));
    committed.push_back(best.ids);
  }
  result.poem.validate();
  return result;
}

std::string GenerationResult::to_json() const {
  nlohmann::json j;
  j["lines"] = poem.line_strings();
  j["per_line"] = nlohmann::json::array();
  for (const auto& d : per_line) {
    nlohmann::json row;
    row["keyword"] = d.keyword;
    row["form"] = d.form;
    row["offset"] = d.offset;
    row["score"] = d.score;
    row["candidates"] = d.candidates;
    j["per_line"].push_back(std::move(row));
  }
  return j.dump();
}

template std::vector<Candidate> constrained_beam_search(model::InfillModel<float>&,
                                                        const std::vector<std::vector<int>>&,
                                                        const PlacementTemplate&,
                                                        const AbstractLabels&, int);
template std::vector<Candidate> constrained_beam_search(model::InfillModel<double>&,
                                                        const std::vector<std::vector<int>>&,
                                                        const PlacementTemplate&,
                                                        const AbstractLabels&, int);
template GenerationResult generate_poem(const GenerationRequest&, model::InfillModel<float>&,
                                        const corpus::Vocabulary&);
template GenerationResult generate_poem(const GenerationRequest&, model::InfillModel<double>&,
                                        const corpus::Vocabulary&);

}  // namespace ipg::decode
