#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ipg/corpus.hpp"
#include "ipg/labels.hpp"

namespace ipg::evalinfo {

/// Label-consistency rates between generated poems and their source images.
/// Aspects whose image label is "other" cannot be judged and are skipped.
struct InfoResult {
  std::array<int, kNumAspects> matched{};
  std::array<int, kNumAspects> compared{};
  int skipped_other = 0;

  int total_matched() const;
  int total_compared() const;
  /// Pooled rate; empty when nothing was comparable.
  std::optional<double> overall() const;
  std::optional<double> rate(Aspect a) const;

  /// Strict variant: a pair counts only if every comparable aspect matches.
  int strict_matched = 0;
  int strict_compared = 0;
  std::optional<double> strict_rate() const;

  std::string to_json(bool include_strict) const;
};

/// Per pair and aspect with image label != "other": compared
/// increments, matched increments iff the labels agree.
InfoResult info_score(const std::vector<std::pair<AbstractLabels, AbstractLabels>>& pairs);

/// Labels each poem with the rule classifier and scores it against the image
/// labels. Lists must have equal length.
InfoResult evaluate_run(const std::vector<prosody::Poem>& poems,
                        const std::vector<AbstractLabels>& image_labels,
                        const corpus::RuleClassifier& rules);

}  // namespace ipg::evalinfo
