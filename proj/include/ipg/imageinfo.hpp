#pragma once

#include <array>
#include <string>
#include <vector>

#include "ipg/labels.hpp"

namespace ipg::imageinfo {

/// Modern keywords with recognizer confidences, whatever provider produced
/// them. The generation pipeline only ever sees this shape.
struct ImageTags {
  struct Tag {
    std::string tag;
    double confidence = 0.0;
  };
  std::vector<Tag> tags;
  std::string source;
};

/// Per-aspect probabilities over the non-"other" categories. "other" is never
/// predicted directly; it only appears through thresholding.
struct AspectDistribution {
  // Index a: probabilities aligned with aspect_categories(a) minus "other".
  std::array<std::vector<double>, kNumAspects> probs;

  AspectDistribution();
  /// Throws InputError if any aspect does not sum to 1 within 1e-6.
  void validate() const;
};

/// Decoded RGB8 image.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;  // 3 bytes per pixel, row-major

  size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

/// JSON array [{"tag": str, "confidence": real}]. Confidence must be in [0,1].
ImageTags load_tags(const std::string& path);

/// Labels file: either final labels {"season": str, ...} or distributions
/// {"season": {cat: p, ...}, ...}, which are thresholded on load.
AbstractLabels load_labels(const std::string& path, double threshold = 0.8);

/// Per aspect: the argmax category when its probability reaches `threshold`
/// (inclusive) and is unique, otherwise "other".
AbstractLabels apply_threshold(const AspectDistribution& dist, double threshold = 0.8);

/// PPM (P6, maxval 255) or PNG by file magic.
Raster load_image(const std::string& path);

/// Deterministic demo classifier: luminance buckets drive time of day, hue
/// dominance drives season, white/gray/dark fractions drive weather.
/// Throws InputError on a zero-pixel raster.
AspectDistribution heuristic_classify(const Raster& raster);

/// POSTs the image to a tagging endpoint (multipart, bearer token) and parses
/// the same JSON schema as load_tags. Throws TagServiceError, with distinct
/// kinds for transport failures, non-2xx statuses and schema violations.
ImageTags fetch_tags_http(const std::string& endpoint, const std::string& image_path,
                          const std::string& auth_token);

}  // namespace ipg::imageinfo
