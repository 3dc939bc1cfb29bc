#pragma once

#include <array>
#include <string>
#include <vector>

#include "ipg/corpus.hpp"
#include "ipg/labels.hpp"
#include "ipg/model.hpp"
#include "ipg/prosody.hpp"

namespace ipg::decode {

/// Position class of a keyword inside a line. A keyword spanning the whole
/// line canonicalizes to Front.
enum class Form { Front, Middle, Back };

const char* form_name(Form f);

/// One way of placing a keyword into a line: the keyword characters sit at a
/// contiguous offset, every other position is MASK.
struct PlacementTemplate {
  std::vector<int> masked_line;                 // line_len ids, MASK or keyword chars
  std::vector<std::pair<int, int>> forced;      // (position, token id)
  Form form = Form::Front;
  int offset = 0;
};

/// One template per contiguous offset; a single all-MASK template for an
/// empty keyword. Throws InputError when the keyword is longer than the line.
std::vector<PlacementTemplate> enumerate_placements(const std::vector<int>& keyword_ids,
                                                    int line_len);

struct Candidate {
  std::vector<int> ids;
  double logprob = 0.0;  // sum over steps of log p(token)
  Form form = Form::Front;
  int offset = 0;
};

/// Beam search over one template. Forced positions emit the forced token for
/// every hypothesis (its log-probability still counts); free positions expand
/// over non-special tokens. Returns up to beam_size finished lines, best
/// first.
template <typename T>
std::vector<Candidate> constrained_beam_search(model::InfillModel<T>& m,
                                               const std::vector<std::vector<int>>& prefix_lines,
                                               const PlacementTemplate& tpl,
                                               const AbstractLabels& labels, int beam_size);

/// Per-line prosody scoring context used as a soft ranking penalty.
struct LineProsody {
  const prosody::ToneDict* tones = nullptr;
  const prosody::RhymeDict* rhymes = nullptr;
  const prosody::TonalPattern* pattern = nullptr;
  const corpus::Vocabulary* vocab = nullptr;
  double weight = 1.0;
  int line_index = 0;       // 0-based position of the line being ranked
  std::string rhyme_group;  // group committed by line 1, empty when unknown

  /// prosody_score of the single line at line_index: tone conformance against
  /// the pattern row plus the rhyme requirement for lines 1, 2 and 4.
  double score(const std::vector<int>& ids) const;
};

/// Picks the best candidate by length-normalized log-probability plus the
/// optional prosody penalty weight*(prosody_score - 1). Ties break by
/// Front < Middle < Back, then lexicographic token ids. Throws on empty input.
const Candidate& rank_candidates(const std::vector<Candidate>& candidates, int line_len,
                                 const LineProsody* pros);

struct ProsodySettings {
  prosody::ToneDict tones;
  prosody::RhymeDict rhymes;
  prosody::TonalPattern pattern;
  double weight = 1.0;
};

struct GenerationRequest {
  std::array<std::string, 4> keywords;  // UTF-8 phrases, empty entries allowed
  AbstractLabels labels;
  int line_len = 5;
  int beam_size = 5;
  const ProsodySettings* prosody = nullptr;  // optional, borrowed
};

struct LineDiagnostics {
  std::string keyword;
  std::string form;
  int offset = 0;
  double score = 0.0;
  int candidates = 0;
};

struct GenerationResult {
  prosody::Poem poem;
  std::vector<LineDiagnostics> per_line;

  std::string to_json() const;
};

/// Line-by-line generation: each line conditions on the committed previous
/// lines, enumerates the placements of its keyword, searches each template
/// and commits the ranked winner.
template <typename T>
GenerationResult generate_poem(const GenerationRequest& req, model::InfillModel<T>& m,
                               const corpus::Vocabulary& vocab);

}  // namespace ipg::decode
