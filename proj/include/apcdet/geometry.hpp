#pragma once

namespace apcdet {

/// Axis-aligned box in normalized image coordinates, centroid form.
struct Box {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool operator==(const Box& other) const = default;
};

/// Corner form, canonical for intersection arithmetic.
struct CornerBox {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;
};

CornerBox to_corners(const Box& box);

/// Throws ValidationError when xmin > xmax or ymin > ymax.
Box from_corners(const CornerBox& corners);

double area(const Box& box);

/// Intersection over union in [0, 1]. Pairs with zero union area yield 0.
double iou(const Box& a, const Box& b);

/// 1 - iou(a, b): the location-based dissimilarity.
double jaccard_distance(const Box& a, const Box& b);

/// Offset row such that decode(encode(gt, def), def) reproduces gt.
Box encode(const Box& gt, const Box& def);

struct Decoded {
  Box box;
  bool clamped = false;  // set when a negative decoded extent was clamped to 0
};

/// Componentwise sum of offsets and the default box.
Decoded decode(const Box& offsets, const Box& def);

}  // namespace apcdet
