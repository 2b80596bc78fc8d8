#include "apcdet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "apcdet/errors.hpp"
#include "apcdet/geometry.hpp"
#include "apcdet/rng.hpp"

namespace apcdet {
namespace synth {

namespace {

constexpr const char* kPairClass = "machine";
constexpr const char* kExtraClass = "crate";

enum class Texture { horizontal, vertical, diagonal };

void fill_rect(ImageRaster& image, const CornerBox& rect, Texture texture,
               int period, int phase, double dark, double light) {
  const int x0 = std::clamp(static_cast<int>(std::lround(rect.xmin * image.width)), 0, image.width);
  const int x1 = std::clamp(static_cast<int>(std::lround(rect.xmax * image.width)), 0, image.width);
  const int y0 = std::clamp(static_cast<int>(std::lround(rect.ymin * image.height)), 0, image.height);
  const int y1 = std::clamp(static_cast<int>(std::lround(rect.ymax * image.height)), 0, image.height);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      int stripe = 0;
      switch (texture) {
        case Texture::horizontal: stripe = ((y + phase) / period) % 2; break;
        case Texture::vertical: stripe = ((x + phase) / period) % 2; break;
        case Texture::diagonal: stripe = ((x + y + phase) / period) % 2; break;
      }
      const double value = stripe ? light : dark;
      for (int c = 0; c < image.channels; ++c) image.at(x, y, c) = value;
    }
  }
}

Box shifted_scaled(const CornerBox& base, double dx, double dy, double scale,
                   double pivot_x, double pivot_y) {
  const auto map_x = [&](double x) { return pivot_x + (x - pivot_x) * scale + dx; };
  const auto map_y = [&](double y) { return pivot_y + (y - pivot_y) * scale + dy; };
  return from_corners({map_x(base.xmin), map_y(base.ymin), map_x(base.xmax), map_y(base.ymax)});
}

Box jittered(const Box& box, Rng& rng, double amount) {
  CornerBox corners = to_corners(box);
  corners.xmin += rng.uniform(-amount, amount);
  corners.ymin += rng.uniform(-amount, amount);
  corners.xmax += rng.uniform(-amount, amount);
  corners.ymax += rng.uniform(-amount, amount);
  return from_corners(corners);
}

bool inside_frame(const Box& box) {
  const CornerBox corners = to_corners(box);
  return corners.xmin >= 0.005 && corners.ymin >= 0.005 && corners.xmax <= 0.995 &&
         corners.ymax <= 0.995;
}

std::vector<double> scores_from_logits(const std::vector<double>& logits) {
  std::vector<double> probs(logits.size());
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - peak);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

struct PairGeometry {
  Box large_object;
  Box small_object;
  Box large_detection;
  Box small_detection;
};

// Canonical pair layout, in a shared horizontal band: the large object's
// detection stretches toward the small one and the small object's detection
// stretches back over the large one, so the two detection boxes overlap
// well above the greedy threshold while each still matches its own object.
PairGeometry pair_layout(const SynthSpec& spec, Rng& rng, double band_y, double band_shift_x) {
  const double scale = rng.uniform(0.85, 1.08);
  const double dx = band_shift_x + rng.uniform(-0.04, 0.04);
  const double dy = band_y - 0.5;
  for (int attempt = 0; attempt < 64; ++attempt) {
    PairGeometry geometry;
    geometry.large_object = shifted_scaled({0.20, 0.35, 0.44, 0.65}, dx, dy, scale, 0.38, 0.5);
    geometry.small_object = shifted_scaled({0.44, 0.35, 0.56, 0.65}, dx, dy, scale, 0.38, 0.5);
    geometry.large_detection =
        jittered(shifted_scaled({0.23, 0.35, 0.53, 0.65}, dx, dy, scale, 0.38, 0.5), rng, 0.004);
    geometry.small_detection =
        jittered(shifted_scaled({0.335, 0.35, 0.56, 0.65}, dx, dy, scale, 0.38, 0.5), rng, 0.004);

    const double pair_overlap = iou(geometry.large_detection, geometry.small_detection);
    const bool pair_ok = pair_overlap > spec.pair_iou_low && pair_overlap < spec.pair_iou_high;
    const bool large_ok =
        iou(geometry.large_detection, geometry.large_object) >= 0.55 &&
        iou(geometry.large_detection, geometry.large_object) >
            iou(geometry.large_detection, geometry.small_object);
    const bool small_ok =
        iou(geometry.small_detection, geometry.small_object) >= 0.52 &&
        iou(geometry.small_detection, geometry.small_object) >
            iou(geometry.small_detection, geometry.large_object) &&
        iou(geometry.small_detection, geometry.large_object) < 0.45;
    const bool frame_ok = inside_frame(geometry.large_object) &&
                          inside_frame(geometry.small_object) &&
                          inside_frame(geometry.large_detection) &&
                          inside_frame(geometry.small_detection);
    if (pair_ok && large_ok && small_ok && frame_ok) return geometry;
  }
  throw std::runtime_error("synth: failed to place a contested pair");
}

}  // namespace

io::ClassVocabulary vocabulary() {
  return {{"background", kPairClass, kExtraClass}};
}

SyntheticScene make_scene(const SynthSpec& spec, int scene_index) {
  if (spec.image_size < 64) throw ValidationError("synth: image size must be >= 64");
  if (spec.contested_pairs < 0 || spec.extra_objects < 0 || spec.scenes < 1) {
    throw ValidationError("synth: counts must be nonnegative and scenes >= 1");
  }
  if (spec.contested_pairs > 2) {
    throw ValidationError("synth: at most two contested pairs fit a scene");
  }
  if (spec.extra_objects > 3) {
    throw ValidationError("synth: at most three extra objects fit a scene");
  }
  if (!(spec.pair_iou_low > 0.5 && spec.pair_iou_high < 0.8 &&
        spec.pair_iou_low < spec.pair_iou_high)) {
    throw ValidationError("synth: pair iou bounds must satisfy 0.5 < low < high < 0.8");
  }
  if (!(spec.min_object_extent >= 0.05 && spec.min_object_extent <= spec.max_object_extent &&
        spec.max_object_extent <= 0.35)) {
    throw ValidationError("synth: object extents must satisfy 0.05 <= min <= max <= 0.35");
  }

  Rng rng(spec.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(scene_index + 1));

  SyntheticScene scene;
  char name[32];
  std::snprintf(name, sizeof(name), "scene-%04d", scene_index);
  scene.image_id = name;
  scene.image = make_raster(spec.image_size, spec.image_size, 3, 0.5);
  scene.detections.image_id = scene.image_id;

  const io::ClassVocabulary classes = vocabulary();
  const int pair_class = classes.index_of(kPairClass);
  const int extra_class = classes.index_of(kExtraClass);

  // Contested pairs occupy horizontal bands in the upper part of the frame.
  for (int p = 0; p < spec.contested_pairs; ++p) {
    const double band_y = spec.contested_pairs == 1 ? rng.uniform(0.40, 0.56) : 0.26 + 0.38 * p;
    const double band_shift = rng.uniform(-0.10, 0.12);
    const PairGeometry geometry = pair_layout(spec, rng, band_y, band_shift);

    const int large_period = rng.uniform_int(5, 8);
    const int small_period = rng.uniform_int(3, 5);
    fill_rect(scene.image, to_corners(geometry.large_object), Texture::horizontal,
              large_period, rng.uniform_int(0, 7), 0.10 + rng.uniform(0.0, 0.08),
              0.82 + rng.uniform(0.0, 0.08));
    fill_rect(scene.image, to_corners(geometry.small_object), Texture::vertical,
              small_period, rng.uniform_int(0, 7), 0.05 + rng.uniform(0.0, 0.08),
              0.87 + rng.uniform(0.0, 0.08));

    scene.annotations.push_back({scene.image_id, kPairClass, geometry.large_object});
    scene.annotations.push_back({scene.image_id, kPairClass, geometry.small_object});

    const double large_logit = 2.4 + rng.uniform(-0.15, 0.15);
    const double small_logit = 1.6 + rng.uniform(-0.15, 0.15);
    std::vector<double> large_logits(classes.names.size(), 0.0);
    large_logits[0] = -1.0;
    large_logits[static_cast<std::size_t>(pair_class)] = large_logit;
    std::vector<double> small_logits(classes.names.size(), 0.0);
    small_logits[0] = -1.0;
    small_logits[static_cast<std::size_t>(pair_class)] = small_logit;
    scene.detections.rows.push_back(
        {scores_from_logits(large_logits), geometry.large_detection});
    scene.detections.rows.push_back(
        {scores_from_logits(small_logits), geometry.small_detection});
  }

  // Isolated objects live in the bottom band, clear of every pair.
  for (int e = 0; e < spec.extra_objects; ++e) {
    const double w =
        rng.uniform(spec.min_object_extent, std::min(spec.max_object_extent, 0.20));
    const double h = rng.uniform(0.09, 0.12);
    const double cx = 0.16 + 0.30 * e + rng.uniform(-0.02, 0.02);
    const double cy = 0.90 + rng.uniform(-0.008, 0.008);
    const Box object{cx, cy, w, h};
    fill_rect(scene.image, to_corners(object), Texture::diagonal, rng.uniform_int(3, 6),
              rng.uniform_int(0, 7), 0.12 + rng.uniform(0.0, 0.08),
              0.80 + rng.uniform(0.0, 0.08));
    scene.annotations.push_back({scene.image_id, kExtraClass, object});

    std::vector<double> logits(classes.names.size(), 0.0);
    logits[0] = -1.0;
    logits[static_cast<std::size_t>(extra_class)] = 2.4 + rng.uniform(-0.15, 0.15);
    scene.detections.rows.push_back({scores_from_logits(logits), jittered(object, rng, 0.004)});
  }

  return scene;
}

std::vector<SyntheticScene> make_scenes(const SynthSpec& spec) {
  std::vector<SyntheticScene> scenes;
  scenes.reserve(static_cast<std::size_t>(spec.scenes));
  for (int i = 0; i < spec.scenes; ++i) scenes.push_back(make_scene(spec, i));
  return scenes;
}

}  // namespace synth
}  // namespace apcdet
