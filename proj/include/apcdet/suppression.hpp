#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "apcdet/clustering.hpp"
#include "apcdet/features.hpp"
#include "apcdet/geometry.hpp"
#include "apcdet/matrix.hpp"

namespace apcdet {

// Class index 0 is the background everywhere.
inline constexpr int kBackgroundClass = 0;

/// One predicted row: per-class confidences (a probability vector) and the
/// decoded box.
struct DetectionRow {
  std::vector<double> scores;
  Box box;
};

/// All predictions of one image, in detector output order.
struct DetectionSet {
  std::string image_id;
  std::vector<DetectionRow> rows;
};

struct Detection {
  int class_index = 0;  // never the background
  double confidence = 0.0;
  Box box;
  std::size_t source_row = 0;
};

using FinalDetections = std::vector<Detection>;

enum class PreferenceMode { raw, scaled };
enum class SimilarityConvention { literal, negated };

/// Knobs of the clustering-based selector plus the greedy baseline's
/// overlap threshold.
struct SuppressionConfig {
  double appearance_weight = 1.0;  // weight of the appearance term, in [0, 1]
  double confidence_floor = 0.01;
  bool per_class = true;
  PreferenceMode preference_mode = PreferenceMode::scaled;
  SimilarityConvention similarity_convention = SimilarityConvention::negated;
  double nms_iou_threshold = 0.5;
  apc::ApcParams apc;
  HogConfig hog;
};

/// Greedy per-class suppression: among rows whose argmax class is
/// class_index and whose confidence reaches the floor, repeatedly keep the
/// most confident survivor (ties to the lowest row) and drop survivors
/// overlapping it with iou > iou_threshold.
FinalDetections nms(const DetectionSet& detections, int class_index,
                    double iou_threshold = 0.5, double confidence_floor = 0.01);

/// nms over every non-background class, concatenated in class order.
FinalDetections nms_suppress(const DetectionSet& detections,
                             const SuppressionConfig& config);

/// Per row, the maximum class confidence.
std::vector<double> preferences(const DetectionSet& detections);

/// Dense similarity matrix over the rows of `detections`: off-diagonal
/// entries combine the location term (iou-based) and the appearance term
/// (negated squared distance between patch descriptors), halved; the
/// diagonal carries the preferences, either raw or rescaled onto the
/// off-diagonal value range. `image` may be null when appearance_weight
/// is 0; otherwise it is required.
Matrix similarity_matrix(const DetectionSet& detections, const ImageRaster* image,
                         const SuppressionConfig& config);

/// Clustering-based selection: background and sub-floor rows are dropped,
/// remaining rows are grouped (per argmax class by default), each group is
/// clustered over its similarity matrix, and cluster exemplars become the
/// final detections.
FinalDetections apc_suppress(const DetectionSet& detections, const ImageRaster* image,
                             const SuppressionConfig& config);

}  // namespace apcdet
