#include "ipg/evalinfo.hpp"

#include <json.hpp>

namespace ipg::evalinfo {

int InfoResult::total_matched() const { return matched[0] + matched[1] + matched[2]; }

int InfoResult::total_compared() const { return compared[0] + compared[1] + compared[2]; }

std::optional<double> InfoResult::overall() const {
  if (total_compared() == 0) return std::nullopt;
  return static_cast<double>(total_matched()) / total_compared();
}

std::optional<double> InfoResult::rate(Aspect a) const {
  int i = static_cast<int>(a);
  if (compared[i] == 0) return std::nullopt;
  return static_cast<double>(matched[i]) / compared[i];
}

std::optional<double> InfoResult::strict_rate() const {
  if (strict_compared == 0) return std::nullopt;
  return static_cast<double>(strict_matched) / strict_compared;
}

std::string InfoResult::to_json(bool include_strict) const {
  nlohmann::json j;
  auto put = [](std::optional<double> v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  j["overall"] = put(overall());
  for (auto a : kAspects) j[aspect_name(a)] = put(rate(a));
  j["compared"] = total_compared();
  j["skipped_other"] = skipped_other;
  if (include_strict) {
    j["strict_all3"] = put(strict_rate());
    j["strict_compared"] = strict_compared;
  }
  return j.dump();
}

InfoResult info_score(const std::vector<std::pair<AbstractLabels, AbstractLabels>>& pairs) {
  if (pairs.empty()) throw InputError("info_score: empty pair list");
  InfoResult r;
  for (const auto& [poem_labels, image_labels] : pairs) {
    int comparable = 0, hits = 0;
    for (auto a : kAspects) {
      if (image_labels.is_other(a)) {
        ++r.skipped_other;
        continue;
      }
      int i = static_cast<int>(a);
      ++r.compared[i];
      ++comparable;
      if (poem_labels.of(a) == image_labels.of(a)) {
        ++r.matched[i];
        ++hits;
      }
    }
    if (comparable > 0) {
      ++r.strict_compared;
      if (hits == comparable) ++r.strict_matched;
    }
  }
  return r;
}

InfoResult evaluate_run(const std::vector<prosody::Poem>& poems,
                        const std::vector<AbstractLabels>& image_labels,
                        const corpus::RuleClassifier& rules) {
  if (poems.size() != image_labels.size())
    throw InputError("evaluate_run: poem and label lists differ in length");
  std::vector<std::pair<AbstractLabels, AbstractLabels>> pairs;
  pairs.reserve(poems.size());
  for (size_t i = 0; i < poems.size(); ++i)
    pairs.emplace_back(corpus::label_poem(poems[i], rules), image_labels[i]);
  return info_score(pairs);
}

}  // namespace ipg::evalinfo
