#include "ipg/imageinfo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>
#include <png.h>

#define CPPHTTPLIB_NO_EXCEPTIONS 0
#include <httplib.h>

#include "ipg/error.hpp"

namespace ipg::imageinfo {

using nlohmann::json;

AspectDistribution::AspectDistribution() {
  for (int a = 0; a < kNumAspects; ++a) {
    // Distributions range over the real categories only; "other" comes from
    // thresholding.
    size_t n = aspect_categories(kAspects[a]).size() - 1;
    probs[a].assign(n, 0.0);
  }
}

void AspectDistribution::validate() const {
  for (int a = 0; a < kNumAspects; ++a) {
    double sum = 0.0;
    for (double p : probs[a]) {
      if (p < 0.0 || p > 1.0)
        throw InputError(std::string("probability out of range for aspect ") +
                         aspect_name(kAspects[a]));
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw InputError(std::string("probabilities for aspect ") + aspect_name(kAspects[a]) +
                       " do not sum to 1");
  }
}

namespace {

ImageTags parse_tags_json(const json& j, const std::string& origin) {
  if (!j.is_array()) throw InputError(origin + ": tags must be a JSON array");
  ImageTags tags;
  for (const auto& item : j) {
    if (!item.is_object()) throw InputError(origin + ": each tag must be an object");
    if (!item.contains("tag")) throw InputError(origin + ": tag entry missing field 'tag'");
    if (!item.contains("confidence"))
      throw InputError(origin + ": tag entry missing field 'confidence'");
    ImageTags::Tag t;
    t.tag = item["tag"].get<std::string>();
    t.confidence = item["confidence"].get<double>();
    if (t.confidence < 0.0 || t.confidence > 1.0)
      throw InputError(origin + ": confidence out of [0,1] for tag '" + t.tag + "'");
    tags.tags.push_back(std::move(t));
  }
  return tags;
}

}  // namespace

ImageTags load_tags(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open tags file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("malformed tags JSON " + path + ": " + e.what());
  }
  ImageTags tags = parse_tags_json(j, path);
  tags.source = "file:" + path;
  return tags;
}

AbstractLabels apply_threshold(const AspectDistribution& dist, double threshold) {
  dist.validate();
  AbstractLabels labels;
  for (int a = 0; a < kNumAspects; ++a) {
    const auto& p = dist.probs[a];
    size_t arg = 0;
    bool tie = false;
    for (size_t i = 1; i < p.size(); ++i) {
      if (p[i] > p[arg]) {
        arg = i;
        tie = false;
      } else if (p[i] == p[arg]) {
        tie = true;
      }
    }
    if (!tie && p[arg] >= threshold)
      labels.set(kAspects[a], static_cast<int>(arg));
    else
      labels.set_other(kAspects[a]);
  }
  return labels;
}

AbstractLabels load_labels(const std::string& path, double threshold) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open labels file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("malformed labels JSON " + path + ": " + e.what());
  }
  if (!j.is_object()) throw InputError(path + ": labels must be a JSON object");

  bool distribution_form = false;
  for (auto a : kAspects) {
    auto it = j.find(aspect_name(a));
    if (it != j.end() && it->is_object()) distribution_form = true;
  }

  if (!distribution_form) {
    AbstractLabels labels;
    for (auto a : kAspects) {
      auto it = j.find(aspect_name(a));
      if (it == j.end()) continue;  // missing aspect stays "other"
      labels.set(a, it->get<std::string>());
    }
    return labels;
  }

  AspectDistribution dist;
  for (int a = 0; a < kNumAspects; ++a) {
    Aspect aspect = kAspects[a];
    auto it = j.find(aspect_name(aspect));
    if (it == j.end() || !it->is_object())
      throw InputError(path + ": distribution form needs an object per aspect");
    const auto& cats = aspect_categories(aspect);
    for (auto& [cat, val] : it->items()) {
      auto pos = std::find(cats.begin(), cats.end(), cat);
      if (pos == cats.end() || cat == "other")
        throw InputError(path + ": unknown category '" + cat + "' for " + aspect_name(aspect));
      dist.probs[a][pos - cats.begin()] = val.get<double>();
    }
  }
  return apply_threshold(dist, threshold);
}

// ---------------------------------------------------------------------------
// Image decoding: PPM (P6) and PNG
// ---------------------------------------------------------------------------

namespace {

Raster load_ppm(std::ifstream& in, const std::string& path) {
  auto next_token = [&]() -> std::string {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
      if (c == '#') {  // comment to end of line
        while ((c = in.get()) != EOF && c != '\n') {
        }
        continue;
      }
      if (std::isspace(c)) {
        if (!tok.empty()) return tok;
        continue;
      }
      tok.push_back(static_cast<char>(c));
    }
    return tok;
  };

  if (next_token() != "P6") throw InputError(path + ": not a P6 PPM file");
  Raster r;
  try {
    r.width = std::stoi(next_token());
    r.height = std::stoi(next_token());
    int maxval = std::stoi(next_token());
    if (maxval != 255) throw InputError(path + ": only maxval 255 is supported");
  } catch (const std::logic_error&) {
    throw InputError(path + ": malformed PPM header");
  }
  if (r.width <= 0 || r.height <= 0) throw InputError(path + ": bad PPM dimensions");
  r.rgb.resize(r.pixel_count() * 3);
  in.read(reinterpret_cast<char*>(r.rgb.data()), static_cast<std::streamsize>(r.rgb.size()));
  if (static_cast<size_t>(in.gcount()) != r.rgb.size())
    throw InputError(path + ": truncated PPM pixel data");
  return r;
}

Raster load_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw InputError("cannot open image: " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw Error("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw InputError(path + ": malformed PNG");
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  png_uint_32 width = png_get_image_width(png, info);
  png_uint_32 height = png_get_image_height(png, info);
  png_byte color_type = png_get_color_type(png, info);
  png_byte bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  Raster r;
  r.width = static_cast<int>(width);
  r.height = static_cast<int>(height);
  r.rgb.resize(r.pixel_count() * 3);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = r.rgb.data() + y * width * 3;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return r;
}

}  // namespace

Raster load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open image: " + path);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  in.seekg(0);
  if (magic[0] == 'P' && magic[1] == '6') return load_ppm(in, path);
  if (static_cast<unsigned char>(magic[0]) == 0x89 && magic[1] == 'P') return load_png(path);
  throw InputError(path + ": unsupported image format (PPM P6 or PNG expected)");
}

// ---------------------------------------------------------------------------
// Heuristic scene classifier
// ---------------------------------------------------------------------------

AspectDistribution heuristic_classify(const Raster& raster) {
  if (raster.pixel_count() == 0) throw InputError("cannot classify a zero-pixel image");

  double lum_sum = 0.0, lum_sq = 0.0;
  double f_green = 0, f_warm = 0, f_blue = 0, f_white = 0, f_gray = 0, f_dark = 0;
  const size_t n = raster.pixel_count();
  for (size_t i = 0; i < n; ++i) {
    double rr = raster.rgb[3 * i] / 255.0;
    double gg = raster.rgb[3 * i + 1] / 255.0;
    double bb = raster.rgb[3 * i + 2] / 255.0;
    double mx = std::max({rr, gg, bb}), mn = std::min({rr, gg, bb});
    double lum = 0.2126 * rr + 0.7152 * gg + 0.0722 * bb;
    double sat = mx > 0 ? (mx - mn) / mx : 0.0;
    lum_sum += lum;
    lum_sq += lum * lum;

    if (lum > 0.85 && sat < 0.15) f_white += 1;
    if (sat < 0.2 && lum > 0.35 && lum <= 0.85) f_gray += 1;
    if (lum < 0.25) f_dark += 1;

    if (sat >= 0.15 && mx >= 0.15) {
      double hue;
      double d = mx - mn;
      if (mx == rr)
        hue = 60.0 * std::fmod((gg - bb) / d, 6.0);
      else if (mx == gg)
        hue = 60.0 * ((bb - rr) / d + 2.0);
      else
        hue = 60.0 * ((rr - gg) / d + 4.0);
      if (hue < 0) hue += 360.0;
      if (hue >= 70 && hue < 170) f_green += 1;
      if (hue >= 15 && hue < 70) f_warm += 1;
      if (hue >= 170 && hue < 260) f_blue += 1;
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  const double mean_lum = lum_sum * inv;
  const double var_lum = std::max(0.0, lum_sq * inv - mean_lum * mean_lum);
  f_green *= inv;
  f_warm *= inv;
  f_blue *= inv;
  f_white *= inv;
  f_gray *= inv;
  f_dark *= inv;

  const double eps = 1e-3;
  AspectDistribution dist;

  // season: spring leans green, summer saturated green + sky, autumn warm
  // hues, winter white.
  {
    double spring = f_green * (1.5 - mean_lum);
    double summer = 0.6 * f_blue + f_green * mean_lum;
    double autumn = f_warm;
    double winter = f_white;
    double scores[4] = {spring + eps, summer + eps, autumn + eps, winter + eps};
    double sum = scores[0] + scores[1] + scores[2] + scores[3];
    for (int i = 0; i < 4; ++i) dist.probs[0][i] = scores[i] / sum;
  }
  // time: bright scenes are daytime, mid-dark dusk, dark night.
  {
    double day = std::max(0.0, mean_lum - 0.15);
    double nightfall = std::exp(-std::pow((mean_lum - 0.35) / 0.15, 2.0));
    double night = std::max(0.0, 0.6 - mean_lum);
    double scores[3] = {day + eps, nightfall + eps, night + eps};
    double sum = scores[0] + scores[1] + scores[2];
    for (int i = 0; i < 3; ++i) dist.probs[1][i] = scores[i] / sum;
  }
  // weather: blue sky + brightness reads sunny, flat gray cloudy, dark wet,
  // white snowy.
  {
    double sunshine = f_blue + std::max(0.0, mean_lum - 0.55) * (1.0 - f_white);
    double cloudy = f_gray * (1.0 - var_lum);
    double rainy = f_dark * (1.0 - f_white);
    double snowy = 1.2 * f_white;
    double scores[4] = {sunshine + eps, cloudy + eps, rainy + eps, snowy + eps};
    double sum = scores[0] + scores[1] + scores[2] + scores[3];
    for (int i = 0; i < 4; ++i) dist.probs[2][i] = scores[i] / sum;
  }
  return dist;
}

// ---------------------------------------------------------------------------
// HTTP tag provider
// ---------------------------------------------------------------------------

ImageTags fetch_tags_http(const std::string& endpoint, const std::string& image_path,
                          const std::string& auth_token) {
  std::ifstream img(image_path, std::ios::binary);
  if (!img) throw InputError("cannot open image: " + image_path);
  std::string body((std::istreambuf_iterator<char>(img)), std::istreambuf_iterator<char>());

  // endpoint: http://host:port/path
  std::string host_port = endpoint, request_path = "/";
  auto scheme = endpoint.find("://");
  std::string rest = scheme == std::string::npos ? endpoint : endpoint.substr(scheme + 3);
  auto slash = rest.find('/');
  if (slash != std::string::npos) {
    host_port = rest.substr(0, slash);
    request_path = rest.substr(slash);
  } else {
    host_port = rest;
  }

  httplib::Client client(host_port);
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(10, 0);

  httplib::Headers headers;
  if (!auth_token.empty()) headers.emplace("Authorization", "Bearer " + auth_token);

  httplib::MultipartFormDataItems items = {
      {"image", body, image_path, "application/octet-stream"},
  };
  auto res = client.Post(request_path, headers, items);
  if (!res)
    throw TagServiceError(TagServiceError::Kind::Network,
                          "tag service unreachable: " + endpoint);
  if (res->status < 200 || res->status >= 300)
    throw TagServiceError(TagServiceError::Kind::Status,
                          "tag service returned status " + std::to_string(res->status),
                          res->status);

  json j;
  try {
    j = json::parse(res->body);
  } catch (const json::exception& e) {
    throw TagServiceError(TagServiceError::Kind::Schema,
                          std::string("tag service returned malformed JSON: ") + e.what());
  }
  try {
    ImageTags tags = parse_tags_json(j, "tag service response");
    tags.source = "http:" + endpoint;
    return tags;
  } catch (const InputError& e) {
    throw TagServiceError(TagServiceError::Kind::Schema, e.what());
  }
}

}  // namespace ipg::imageinfo
