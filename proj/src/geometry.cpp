#include "apcdet/geometry.hpp"

#include <algorithm>

#include "apcdet/errors.hpp"

namespace apcdet {

CornerBox to_corners(const Box& box) {
  return {box.cx - box.w / 2.0, box.cy - box.h / 2.0,
          box.cx + box.w / 2.0, box.cy + box.h / 2.0};
}

Box from_corners(const CornerBox& corners) {
  if (corners.xmin > corners.xmax || corners.ymin > corners.ymax) {
    throw ValidationError("from_corners: min corner exceeds max corner");
  }
  return {(corners.xmin + corners.xmax) / 2.0,
          (corners.ymin + corners.ymax) / 2.0,
          corners.xmax - corners.xmin,
          corners.ymax - corners.ymin};
}

double area(const Box& box) { return box.w * box.h; }

double iou(const Box& a, const Box& b) {
  const CornerBox ca = to_corners(a);
  const CornerBox cb = to_corners(b);
  const double iw = std::min(ca.xmax, cb.xmax) - std::max(ca.xmin, cb.xmin);
  const double ih = std::min(ca.ymax, cb.ymax) - std::max(ca.ymin, cb.ymin);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double intersection = iw * ih;
  // Areas in corner space, so identical boxes intersect in exactly their
  // own area and the ratio is exactly 1.
  const double area_a = (ca.xmax - ca.xmin) * (ca.ymax - ca.ymin);
  const double area_b = (cb.xmax - cb.xmin) * (cb.ymax - cb.ymin);
  const double union_area = area_a + area_b - intersection;
  if (union_area <= 0.0) return 0.0;
  return intersection / union_area;
}

double jaccard_distance(const Box& a, const Box& b) { return 1.0 - iou(a, b); }

Box encode(const Box& gt, const Box& def) {
  return {gt.cx - def.cx, gt.cy - def.cy, gt.w - def.w, gt.h - def.h};
}

Decoded decode(const Box& offsets, const Box& def) {
  Decoded result;
  result.box = {offsets.cx + def.cx, offsets.cy + def.cy,
                offsets.w + def.w, offsets.h + def.h};
  if (result.box.w < 0.0) {
    result.box.w = 0.0;
    result.clamped = true;
  }
  if (result.box.h < 0.0) {
    result.box.h = 0.0;
    result.clamped = true;
  }
  return result;
}

}  // namespace apcdet
