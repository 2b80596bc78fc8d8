#include "apcdet/eval.hpp"

#include <algorithm>
#include <set>

#include "apcdet/errors.hpp"

namespace apcdet {

namespace {

struct CurvePoint {
  double recall;
  double precision;
};

struct ScoredClass {
  std::vector<CurvePoint> curve;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
};

// Rank by confidence and greedily claim the unmatched ground truth with the
// best overlap in the detection's image; a claim at or above the threshold
// is a true positive, anything else (including a duplicate on an already
// claimed object) is a false positive.
ScoredClass score_detections(std::vector<RankedDetection> detections,
                             const std::vector<GroundTruthBox>& ground_truth,
                             const EvalConfig& config) {
  std::sort(detections.begin(), detections.end(),
            [](const RankedDetection& a, const RankedDetection& b) {
              if (a.confidence != b.confidence) return a.confidence > b.confidence;
              if (a.image_id != b.image_id) return a.image_id < b.image_id;
              return a.source_row < b.source_row;
            });

  ScoredClass scored;
  scored.curve.reserve(detections.size());
  std::vector<bool> claimed(ground_truth.size(), false);
  for (const auto& detection : detections) {
    double best_overlap = 0.0;
    int best_gt = -1;
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      if (claimed[g] || ground_truth[g].image_id != detection.image_id) continue;
      const double overlap = iou(detection.box, ground_truth[g].box);
      if (overlap > best_overlap) {
        best_overlap = overlap;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0 && best_overlap >= config.iou_threshold) {
      claimed[static_cast<std::size_t>(best_gt)] = true;
      ++scored.true_positives;
    } else {
      ++scored.false_positives;
    }
    scored.curve.push_back(
        {static_cast<double>(scored.true_positives) /
             static_cast<double>(ground_truth.size()),
         static_cast<double>(scored.true_positives) /
             static_cast<double>(scored.true_positives + scored.false_positives)});
  }
  return scored;
}

double area_under_monotonized_curve(const std::vector<CurvePoint>& curve) {
  // Precision is replaced by the running maximum from the right, then the
  // area is summed as rectangles between consecutive recall levels.
  std::vector<CurvePoint> monotone(curve);
  double running = 0.0;
  for (auto it = monotone.rbegin(); it != monotone.rend(); ++it) {
    running = std::max(running, it->precision);
    it->precision = running;
  }
  double ap = 0.0;
  double previous_recall = 0.0;
  for (const auto& point : monotone) {
    if (point.recall > previous_recall) {
      ap += (point.recall - previous_recall) * point.precision;
      previous_recall = point.recall;
    }
  }
  return ap;
}

double eleven_point_ap(const std::vector<CurvePoint>& curve) {
  double total = 0.0;
  for (int step = 0; step <= 10; ++step) {
    const double level = step / 10.0;
    double best = 0.0;
    for (const auto& point : curve) {
      if (point.recall >= level) best = std::max(best, point.precision);
    }
    total += best;
  }
  return total / 11.0;
}

void validate(const EvalConfig& config) {
  if (!(config.iou_threshold > 0.0 && config.iou_threshold <= 1.0)) {
    throw ValidationError("eval: iou threshold must lie in (0, 1]");
  }
}

}  // namespace

double average_precision(std::vector<RankedDetection> detections,
                         const std::vector<GroundTruthBox>& ground_truth,
                         const EvalConfig& config) {
  validate(config);
  if (ground_truth.empty()) {
    throw ValidationError("average_precision: no ground-truth instances");
  }
  if (detections.empty()) return 0.0;
  const ScoredClass scored = score_detections(std::move(detections), ground_truth, config);
  return config.ap_mode == ApMode::all_points
             ? area_under_monotonized_curve(scored.curve)
             : eleven_point_ap(scored.curve);
}

double mean_ap(const EvalReport& report) {
  double total = 0.0;
  std::size_t defined = 0;
  for (const auto& [name, entry] : report.per_class) {
    if (entry.defined) {
      total += entry.ap;
      ++defined;
    }
  }
  if (defined == 0) {
    throw ValidationError("mean_ap: no class has a defined average precision");
  }
  return total / static_cast<double>(defined);
}

EvalReport evaluate(
    const std::map<std::string, std::vector<RankedDetection>>& detections,
    const std::map<std::string, std::vector<GroundTruthBox>>& ground_truth,
    const EvalConfig& config) {
  validate(config);
  std::set<std::string> names;
  for (const auto& [name, boxes] : ground_truth) names.insert(name);
  for (const auto& [name, dets] : detections) names.insert(name);

  EvalReport report;
  for (const auto& name : names) {
    ClassReport entry;
    const auto gt_it = ground_truth.find(name);
    const auto det_it = detections.find(name);
    const std::vector<RankedDetection> dets =
        det_it == detections.end() ? std::vector<RankedDetection>{} : det_it->second;
    entry.gt_count = gt_it == ground_truth.end() ? 0 : gt_it->second.size();
    entry.detection_count = dets.size();
    if (entry.gt_count > 0) {
      entry.defined = true;
      const ScoredClass scored = score_detections(dets, gt_it->second, config);
      entry.true_positives = scored.true_positives;
      entry.false_positives = scored.false_positives;
      entry.ap = dets.empty() ? 0.0
                              : (config.ap_mode == ApMode::all_points
                                     ? area_under_monotonized_curve(scored.curve)
                                     : eleven_point_ap(scored.curve));
      ++report.defined_class_count;
    }
    report.per_class[name] = entry;
  }
  report.map = mean_ap(report);
  return report;
}

ComparisonReport compare(const EvalReport& a, const EvalReport& b) {
  std::set<std::string> names_a, names_b;
  for (const auto& [name, entry] : a.per_class) names_a.insert(name);
  for (const auto& [name, entry] : b.per_class) names_b.insert(name);
  if (names_a != names_b) {
    throw ValidationError("compare: reports cover different class sets");
  }
  ComparisonReport comparison;
  for (const auto& [name, entry_a] : a.per_class) {
    const ClassReport& entry_b = b.per_class.at(name);
    comparison.per_class[name] = {entry_a.ap, entry_b.ap,
                                  (entry_b.ap - entry_a.ap) * 100.0};
  }
  comparison.map_a = a.map;
  comparison.map_b = b.map;
  comparison.delta_points = (b.map - a.map) * 100.0;
  return comparison;
}

}  // namespace apcdet
