#include "apcdet/anchors.hpp"

#include <cmath>

#include "apcdet/errors.hpp"

namespace apcdet {

namespace {

void validate(const AnchorConfig& config) {
  if (config.feature_maps.empty()) {
    throw ValidationError("anchors: at least one feature map is required");
  }
  for (int side : config.feature_maps) {
    if (side < 1) throw ValidationError("anchors: feature map side must be >= 1");
  }
  if (!(config.scale_min > 0.0 && config.scale_min <= config.scale_max &&
        config.scale_max <= 1.0)) {
    throw ValidationError("anchors: require 0 < scale_min <= scale_max <= 1");
  }
  for (double ratio : config.aspect_ratios) {
    if (!(ratio > 0.0)) throw ValidationError("anchors: aspect ratios must be positive");
  }
}

double scale_at(int k, const AnchorConfig& config) {
  const int p = config.map_count();
  if (p == 1) return config.scale_min;  // the progression's 0/0 case
  return config.scale_min +
         (config.scale_max - config.scale_min) * (k - 1) / (p - 1);
}

double successor_scale(const AnchorConfig& config) {
  if (config.scale_after_last) return *config.scale_after_last;
  const int p = config.map_count();
  if (p == 1) return 1.0;
  return config.scale_max + (config.scale_max - config.scale_min) / (p - 1);
}

}  // namespace

ScalePair scale_for_map(int k, const AnchorConfig& config) {
  validate(config);
  if (k < 1 || k > config.map_count()) {
    throw ValidationError("anchors: map index out of range");
  }
  const double s = scale_at(k, config);
  const double s_next =
      (k == config.map_count()) ? successor_scale(config) : scale_at(k + 1, config);
  return {s, std::sqrt(s * s_next)};
}

std::vector<std::pair<double, double>> centroids(int side) {
  if (side < 1) throw ValidationError("anchors: feature map side must be >= 1");
  std::vector<std::pair<double, double>> centers;
  centers.reserve(static_cast<std::size_t>(side) * side);
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) {
      centers.emplace_back((i + 0.5) / side, (j + 0.5) / side);
    }
  }
  return centers;
}

std::size_t anchor_count(const AnchorConfig& config) {
  std::size_t cells = 0;
  for (int side : config.feature_maps) {
    cells += static_cast<std::size_t>(side) * side;
  }
  return (config.aspect_ratios.size() + 2) * cells;
}

DefaultBoxSet generate_anchors(const AnchorConfig& config) {
  validate(config);
  DefaultBoxSet set;
  set.boxes.reserve(anchor_count(config));
  for (int k = 1; k <= config.map_count(); ++k) {
    const std::size_t begin = set.boxes.size();
    const ScalePair scales = scale_for_map(k, config);
    for (const auto& [cx, cy] : centroids(config.feature_maps[k - 1])) {
      for (double ratio : config.aspect_ratios) {
        const double root = std::sqrt(ratio);
        set.boxes.push_back({cx, cy, scales.scale * root, scales.scale / root});
      }
      set.boxes.push_back({cx, cy, scales.scale, scales.scale});
      set.boxes.push_back({cx, cy, scales.scale_prime, scales.scale_prime});
    }
    set.per_map_ranges.emplace_back(begin, set.boxes.size());
  }
  return set;
}

}  // namespace apcdet
