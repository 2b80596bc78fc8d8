#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "apcdet/geometry.hpp"

namespace apcdet {

enum class ApMode { all_points, eleven_point };

struct EvalConfig {
  double iou_threshold = 0.5;
  ApMode ap_mode = ApMode::all_points;
};

/// One detection of a single class, ready for ranking.
struct RankedDetection {
  std::string image_id;
  double confidence = 0.0;
  Box box;
  std::size_t source_row = 0;  // stabilizes ordering of confidence ties
};

struct GroundTruthBox {
  std::string image_id;
  Box box;
};

struct ClassReport {
  double ap = 0.0;
  bool defined = false;  // false when the class has no ground-truth instances
  std::size_t gt_count = 0;
  std::size_t detection_count = 0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
};

struct EvalReport {
  std::map<std::string, ClassReport> per_class;
  double map = 0.0;
  std::size_t defined_class_count = 0;
};

struct ClassDelta {
  double ap_a = 0.0;
  double ap_b = 0.0;
  double delta_points = 0.0;  // (ap_b - ap_a) * 100
};

struct ComparisonReport {
  std::map<std::string, ClassDelta> per_class;
  double map_a = 0.0;
  double map_b = 0.0;
  double delta_points = 0.0;
};

/// VOC-style average precision of one class. Detections are ranked by
/// confidence (ties: lowest image id, then source row); each one greedily
/// claims the unmatched ground truth with the best overlap in its image and
/// counts as a true positive when that overlap reaches the threshold.
/// Requires at least one ground-truth instance.
double average_precision(std::vector<RankedDetection> detections,
                         const std::vector<GroundTruthBox>& ground_truth,
                         const EvalConfig& config = {});

/// Arithmetic mean of the defined per-class APs.
double mean_ap(const EvalReport& report);

/// Per-class AP and mAP over the classes present in the ground truth.
/// `detections` and `ground_truth` map class name -> instances; classes with
/// ground truth but no detections score 0, classes with detections but no
/// ground truth are reported undefined and excluded from the mean.
EvalReport evaluate(
    const std::map<std::string, std::vector<RankedDetection>>& detections,
    const std::map<std::string, std::vector<GroundTruthBox>>& ground_truth,
    const EvalConfig& config = {});

/// Pairwise report deltas in percentage points. The class sets must match.
ComparisonReport compare(const EvalReport& a, const EvalReport& b);

}  // namespace apcdet
