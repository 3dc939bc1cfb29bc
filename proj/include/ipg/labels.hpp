#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "ipg/error.hpp"

namespace ipg {

// Three scene aspects, each with a closed category set ending in "other".
// Every one-hot is padded to kAspectDim so the embedding width is fixed.
constexpr int kNumAspects = 3;
constexpr int kAspectDim = 5;

enum class Aspect { Season = 0, Time = 1, Weather = 2 };

inline const std::vector<std::string>& aspect_categories(Aspect a) {
  static const std::vector<std::string> season = {"spring", "summer", "autumn", "winter", "other"};
  static const std::vector<std::string> time = {"daytime", "nightfall", "night", "other"};
  static const std::vector<std::string> weather = {"sunshine", "cloudy", "rainy", "snowy", "other"};
  switch (a) {
    case Aspect::Season: return season;
    case Aspect::Time: return time;
    default: return weather;
  }
}

inline const char* aspect_name(Aspect a) {
  switch (a) {
    case Aspect::Season: return "season";
    case Aspect::Time: return "time";
    default: return "weather";
  }
}

inline constexpr std::array<Aspect, kNumAspects> kAspects = {Aspect::Season, Aspect::Time,
                                                             Aspect::Weather};

/// Categorical scene labels. Stored as indices into aspect_categories();
/// "other" is always the last index of its aspect.
struct AbstractLabels {
  std::array<int, kNumAspects> idx{};  // season, time, weather

  AbstractLabels() {
    for (auto a : kAspects) set_other(a);
  }

  int of(Aspect a) const { return idx[static_cast<int>(a)]; }
  void set(Aspect a, int category_index);
  void set(Aspect a, const std::string& category);  // throws InputError on unknown category
  void set_other(Aspect a) {
    idx[static_cast<int>(a)] = static_cast<int>(aspect_categories(a).size()) - 1;
  }

  bool is_other(Aspect a) const {
    return of(a) == static_cast<int>(aspect_categories(a).size()) - 1;
  }
  const std::string& name(Aspect a) const { return aspect_categories(a)[of(a)]; }

  bool operator==(const AbstractLabels&) const = default;
};

inline void AbstractLabels::set(Aspect a, int category_index) {
  const auto& cats = aspect_categories(a);
  if (category_index < 0 || category_index >= static_cast<int>(cats.size()))
    throw InputError(std::string("category index out of range for aspect ") + aspect_name(a) +
                     ": " + std::to_string(category_index));
  idx[static_cast<int>(a)] = category_index;
}

inline void AbstractLabels::set(Aspect a, const std::string& category) {
  const auto& cats = aspect_categories(a);
  for (size_t i = 0; i < cats.size(); ++i) {
    if (cats[i] == category) {
      idx[static_cast<int>(a)] = static_cast<int>(i);
      return;
    }
  }
  throw InputError(std::string("unknown ") + aspect_name(a) + " category: " + category);
}

}  // namespace ipg
