#pragma once

#include <cstddef>
#include <vector>

#include "apcdet/anchors.hpp"
#include "apcdet/geometry.hpp"
#include "apcdet/matrix.hpp"

namespace apcdet {

/// Annotated object. class_index is the position in the class vocabulary;
/// index 0 is the background and is not a valid object class.
struct GroundTruthObject {
  int class_index = 0;
  Box box;
};

/// Per-default-box training targets plus the positive/negative partition.
struct MatchResult {
  Matrix class_targets;             // n x class_count one-hot rows; all-zero when negative
  Matrix box_targets;               // n x 4 encoded offsets; zero when negative
  std::vector<std::size_t> positive;  // sorted box indices with a match
  std::vector<std::size_t> negative;  // sorted complement
  std::vector<int> assigned_gt;       // per box, matched object index or -1
};

/// Threshold matching: a default box is positive when its best overlap with
/// any ground-truth box reaches overlap_threshold; it is assigned the object
/// with the highest overlap (ties resolve to the lowest object index).
MatchResult match(const DefaultBoxSet& defaults,
                  const std::vector<GroundTruthObject>& objects,
                  int class_count,
                  double overlap_threshold = 0.5);

}  // namespace apcdet
