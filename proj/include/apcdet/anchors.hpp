#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "apcdet/geometry.hpp"

namespace apcdet {

/// Layout of the default-box grid: per-map side lengths, the scale range,
/// and the aspect-ratio list shared by all maps.
struct AnchorConfig {
  std::vector<int> feature_maps = {38, 19, 10, 5, 3, 1};
  double scale_min = 0.2;
  double scale_max = 0.9;
  std::vector<double> aspect_ratios = {2.0, 3.0, 1.0 / 2.0, 1.0 / 3.0};
  // Scale used as the successor of the last map when forming its extra
  // square box. Unset: the arithmetic progression is extended one step
  // (1.0 for a single-map layout).
  std::optional<double> scale_after_last;

  int map_count() const { return static_cast<int>(feature_maps.size()); }
};

struct ScalePair {
  double scale;        // s_k
  double scale_prime;  // geometric mean of s_k and its successor
};

/// Scales for map k (1-based). A single-map layout uses scale_min directly.
ScalePair scale_for_map(int k, const AnchorConfig& config);

/// Cell-center grid of a square feature map, row-major over (i, j) with
/// cx = (i + 0.5) / side and cy = (j + 0.5) / side.
std::vector<std::pair<double, double>> centroids(int side);

struct DefaultBoxSet {
  std::vector<Box> boxes;
  // Half-open [begin, end) index range of each feature map's boxes.
  std::vector<std::pair<std::size_t, std::size_t>> per_map_ranges;
};

/// Full default-box grid: per map and centroid, one box per aspect ratio
/// followed by the two square boxes (side s_k and s'_k).
DefaultBoxSet generate_anchors(const AnchorConfig& config);

/// (aspect_ratios + 2) * sum of squared map sides.
std::size_t anchor_count(const AnchorConfig& config);

}  // namespace apcdet
