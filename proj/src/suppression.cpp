#include "apcdet/suppression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "apcdet/errors.hpp"

namespace apcdet {

namespace {

int argmax_class(const DetectionRow& row) {
  return static_cast<int>(
      std::max_element(row.scores.begin(), row.scores.end()) - row.scores.begin());
}

double max_confidence(const DetectionRow& row) {
  return *std::max_element(row.scores.begin(), row.scores.end());
}

void validate(const DetectionSet& detections) {
  for (const auto& row : detections.rows) {
    if (row.scores.empty()) {
      throw ValidationError("suppression: detection row without scores");
    }
    for (double s : row.scores) {
      if (!(s >= 0.0 && s <= 1.0)) {
        throw ValidationError("suppression: confidences must lie in [0, 1]");
      }
    }
  }
}

double median(std::vector<double> values) {
  const std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Preference anchors used when the off-diagonal spread is degenerate (two
// rows, or equal similarities): under the negated convention these
// correspond to location-only similarities of strongly and weakly
// overlapping pairs, so duplicates still absorb and far pairs still split.
constexpr double kAnchorLow = -0.4;
constexpr double kAnchorHigh = -0.2;

std::vector<double> scaled_preferences(const std::vector<double>& confidences,
                                       const std::vector<double>& off_diagonal) {
  double lo = *std::min_element(off_diagonal.begin(), off_diagonal.end());
  double hi = median(off_diagonal);
  if (hi - lo < 1e-12) {
    lo = kAnchorLow;
    hi = kAnchorHigh;
  }
  const double conf_lo = *std::min_element(confidences.begin(), confidences.end());
  const double conf_hi = *std::max_element(confidences.begin(), confidences.end());
  std::vector<double> mapped(confidences.size(), hi);
  if (conf_hi - conf_lo > 0.0) {
    for (std::size_t i = 0; i < confidences.size(); ++i) {
      mapped[i] = lo + (confidences[i] - conf_lo) * (hi - lo) / (conf_hi - conf_lo);
    }
  }
  return mapped;
}

}  // namespace

FinalDetections nms(const DetectionSet& detections, int class_index,
                    double iou_threshold, double confidence_floor) {
  validate(detections);
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0) ||
      !(confidence_floor > 0.0 && confidence_floor <= 1.0)) {
    throw ValidationError("nms: thresholds must lie in (0, 1]");
  }
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < detections.rows.size(); ++i) {
    const auto& row = detections.rows[i];
    if (argmax_class(row) == class_index &&
        row.scores[static_cast<std::size_t>(class_index)] >= confidence_floor) {
      candidates.push_back(i);
    }
  }
  std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    const double ca = detections.rows[a].scores[static_cast<std::size_t>(class_index)];
    const double cb = detections.rows[b].scores[static_cast<std::size_t>(class_index)];
    if (ca != cb) return ca > cb;
    return a < b;
  });

  FinalDetections kept;
  std::vector<bool> suppressed(candidates.size(), false);
  for (std::size_t a = 0; a < candidates.size(); ++a) {
    if (suppressed[a]) continue;
    const std::size_t row = candidates[a];
    kept.push_back({class_index,
                    detections.rows[row].scores[static_cast<std::size_t>(class_index)],
                    detections.rows[row].box, row});
    for (std::size_t b = a + 1; b < candidates.size(); ++b) {
      if (suppressed[b]) continue;
      if (iou(detections.rows[row].box, detections.rows[candidates[b]].box) >
          iou_threshold) {
        suppressed[b] = true;
      }
    }
  }
  return kept;
}

FinalDetections nms_suppress(const DetectionSet& detections,
                             const SuppressionConfig& config) {
  validate(detections);
  const int class_count =
      detections.rows.empty() ? 0 : static_cast<int>(detections.rows.front().scores.size());
  FinalDetections all;
  for (int c = kBackgroundClass + 1; c < class_count; ++c) {
    FinalDetections kept =
        nms(detections, c, config.nms_iou_threshold, config.confidence_floor);
    all.insert(all.end(), kept.begin(), kept.end());
  }
  return all;
}

std::vector<double> preferences(const DetectionSet& detections) {
  if (detections.rows.empty()) {
    throw ValidationError("preferences: no detection rows");
  }
  std::vector<double> result;
  result.reserve(detections.rows.size());
  for (const auto& row : detections.rows) result.push_back(max_confidence(row));
  return result;
}

Matrix similarity_matrix(const DetectionSet& detections, const ImageRaster* image,
                         const SuppressionConfig& config) {
  validate(detections);
  if (!(config.appearance_weight >= 0.0 && config.appearance_weight <= 1.0)) {
    throw ValidationError("similarity_matrix: appearance weight must lie in [0, 1]");
  }
  const std::size_t q = detections.rows.size();
  if (q == 0) throw ValidationError("similarity_matrix: no detection rows");

  std::vector<HogDescriptor> descriptors;
  if (config.appearance_weight > 0.0) {
    if (image == nullptr) {
      throw ValidationError("similarity_matrix: image required when appearance weight > 0");
    }
    descriptors.reserve(q);
    for (const auto& row : detections.rows) {
      descriptors.push_back(
          hog(extract_patch(*image, row.box, config.hog.patch_size), config.hog));
    }
  }

  Matrix similarity(q, q);
  std::vector<double> off_diagonal;
  off_diagonal.reserve(q * (q - 1));
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = i + 1; j < q; ++j) {
      const double location = jaccard_distance(detections.rows[i].box,
                                               detections.rows[j].box);
      const double location_term =
          config.similarity_convention == SimilarityConvention::negated ? -location
                                                                        : location;
      double appearance = 0.0;
      if (config.appearance_weight > 0.0) {
        appearance = appearance_similarity(descriptors[i], descriptors[j]);
      }
      const double value =
          (location_term + config.appearance_weight * appearance) / 2.0;
      similarity(i, j) = value;
      similarity(j, i) = value;
      off_diagonal.push_back(value);
      off_diagonal.push_back(value);
    }
  }

  const std::vector<double> confidence = preferences(detections);
  if (config.preference_mode == PreferenceMode::raw || q == 1) {
    for (std::size_t i = 0; i < q; ++i) similarity(i, i) = confidence[i];
  } else {
    const std::vector<double> mapped = scaled_preferences(confidence, off_diagonal);
    for (std::size_t i = 0; i < q; ++i) similarity(i, i) = mapped[i];
  }
  return similarity;
}

FinalDetections apc_suppress(const DetectionSet& detections, const ImageRaster* image,
                             const SuppressionConfig& config) {
  validate(detections);
  // Survivors: argmax class is a real object class and clears the floor.
  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < detections.rows.size(); ++i) {
    const auto& row = detections.rows[i];
    if (argmax_class(row) != kBackgroundClass &&
        max_confidence(row) >= config.confidence_floor) {
      survivors.push_back(i);
    }
  }
  if (survivors.empty()) return {};

  std::vector<std::vector<std::size_t>> groups;
  if (config.per_class) {
    const int class_count = static_cast<int>(detections.rows.front().scores.size());
    for (int c = kBackgroundClass + 1; c < class_count; ++c) {
      std::vector<std::size_t> group;
      for (std::size_t i : survivors) {
        if (argmax_class(detections.rows[i]) == c) group.push_back(i);
      }
      if (!group.empty()) groups.push_back(std::move(group));
    }
  } else {
    groups.push_back(survivors);
  }

  FinalDetections final;
  for (const auto& group : groups) {
    DetectionSet subset;
    subset.image_id = detections.image_id;
    for (std::size_t i : group) subset.rows.push_back(detections.rows[i]);

    std::vector<int> exemplars;
    if (group.size() == 1) {
      exemplars = {0};
    } else {
      const Matrix similarity = similarity_matrix(subset, image, config);
      exemplars = apc::run(similarity, config.apc).exemplars;
    }
    for (int e : exemplars) {
      const std::size_t row = group[static_cast<std::size_t>(e)];
      final.push_back({argmax_class(detections.rows[row]),
                       max_confidence(detections.rows[row]),
                       detections.rows[row].box, row});
    }
  }
  std::sort(final.begin(), final.end(), [](const Detection& a, const Detection& b) {
    if (a.class_index != b.class_index) return a.class_index < b.class_index;
    return a.source_row < b.source_row;
  });
  return final;
}

}  // namespace apcdet
