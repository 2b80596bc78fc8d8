#include "apcdet/matching.hpp"

#include "apcdet/errors.hpp"

namespace apcdet {

MatchResult match(const DefaultBoxSet& defaults,
                  const std::vector<GroundTruthObject>& objects,
                  int class_count,
                  double overlap_threshold) {
  if (defaults.boxes.empty()) {
    throw ValidationError("match: default box set is empty");
  }
  if (!(overlap_threshold > 0.0 && overlap_threshold <= 1.0)) {
    throw ValidationError("match: overlap threshold must be in (0, 1]");
  }
  for (const auto& object : objects) {
    if (object.class_index <= 0 || object.class_index >= class_count) {
      throw ValidationError("match: object class index outside vocabulary");
    }
  }

  const std::size_t n = defaults.boxes.size();
  MatchResult result;
  result.class_targets = Matrix(n, static_cast<std::size_t>(class_count));
  result.box_targets = Matrix(n, 4);
  result.assigned_gt.assign(n, -1);

  for (std::size_t i = 0; i < n; ++i) {
    double best_overlap = 0.0;
    int best_object = -1;
    for (std::size_t j = 0; j < objects.size(); ++j) {
      const double overlap = iou(defaults.boxes[i], objects[j].box);
      if (overlap > best_overlap) {
        best_overlap = overlap;
        best_object = static_cast<int>(j);
      }
    }
    if (best_object >= 0 && best_overlap >= overlap_threshold) {
      const auto& object = objects[static_cast<std::size_t>(best_object)];
      result.assigned_gt[i] = best_object;
      result.class_targets(i, static_cast<std::size_t>(object.class_index)) = 1.0;
      const Box offsets = encode(object.box, defaults.boxes[i]);
      result.box_targets(i, 0) = offsets.cx;
      result.box_targets(i, 1) = offsets.cy;
      result.box_targets(i, 2) = offsets.w;
      result.box_targets(i, 3) = offsets.h;
      result.positive.push_back(i);
    } else {
      result.negative.push_back(i);
    }
  }
  return result;
}

}  // namespace apcdet
