// Independent reference implementations used as oracles by the tests and
// the acceptance suite. Everything here is a deliberately naive, separate
// transcription of the rules the library implements; none of it shares code
// with the implementation under test.
#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <set>
#include <utility>
#include <vector>

#include "apcdet/geometry.hpp"
#include "apcdet/matrix.hpp"
#include "apcdet/suppression.hpp"

namespace oracles {

// Counts pixel centers of a resolution x resolution raster falling inside
// each box and inside both; intersection over union from the counts.
inline double pixel_count_iou(const apcdet::Box& a, const apcdet::Box& b,
                              int resolution = 600) {
  const apcdet::CornerBox ca = apcdet::to_corners(a);
  const apcdet::CornerBox cb = apcdet::to_corners(b);
  auto inside = [](const apcdet::CornerBox& box, double x, double y) {
    return x >= box.xmin && x <= box.xmax && y >= box.ymin && y <= box.ymax;
  };
  long long count_a = 0, count_b = 0, count_both = 0;
  for (int i = 0; i < resolution; ++i) {
    const double x = (i + 0.5) / resolution;
    for (int j = 0; j < resolution; ++j) {
      const double y = (j + 0.5) / resolution;
      const bool in_a = inside(ca, x, y);
      const bool in_b = inside(cb, x, y);
      count_a += in_a;
      count_b += in_b;
      count_both += in_a && in_b;
    }
  }
  const long long count_union = count_a + count_b - count_both;
  if (count_union == 0) return 0.0;
  return static_cast<double>(count_both) / static_cast<double>(count_union);
}

// Greedy suppression as an erase-loop over a working copy: take the most
// confident remaining candidate of the class, emit it, erase everything
// overlapping it beyond the threshold, repeat.
inline std::vector<std::size_t> reference_nms(const apcdet::DetectionSet& detections,
                                              int class_index, double iou_threshold,
                                              double confidence_floor) {
  struct Candidate {
    std::size_t row;
    double confidence;
    apcdet::Box box;
  };
  std::vector<Candidate> pool;
  for (std::size_t i = 0; i < detections.rows.size(); ++i) {
    const auto& scores = detections.rows[i].scores;
    const std::size_t argmax =
        static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) -
                                 scores.begin());
    if (static_cast<int>(argmax) == class_index &&
        scores[static_cast<std::size_t>(class_index)] >= confidence_floor) {
      pool.push_back({i, scores[static_cast<std::size_t>(class_index)],
                      detections.rows[i].box});
    }
  }
  std::vector<std::size_t> kept;
  while (!pool.empty()) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < pool.size(); ++k) {
      if (pool[k].confidence > pool[best].confidence ||
          (pool[k].confidence == pool[best].confidence && pool[k].row < pool[best].row)) {
        best = k;
      }
    }
    const Candidate chosen = pool[best];
    kept.push_back(chosen.row);
    std::vector<Candidate> survivors;
    for (const Candidate& candidate : pool) {
      if (candidate.row == chosen.row) continue;
      if (apcdet::iou(chosen.box, candidate.box) > iou_threshold) continue;
      survivors.push_back(candidate);
    }
    pool = std::move(survivors);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

// Literal message-passing sweep: every max is recomputed with an explicit
// loop over k, no shared row maxima. Damped the same way as the library.
inline void naive_apc_step(const apcdet::Matrix& similarity,
                           apcdet::Matrix& responsibility,
                           apcdet::Matrix& availability, double damping) {
  const std::size_t q = similarity.rows;
  apcdet::Matrix new_responsibility(q, q);
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < q; ++k) {
        if (k == j) continue;
        best = std::max(best, similarity(i, k) + availability(i, k));
      }
      new_responsibility(i, j) =
          damping * responsibility(i, j) + (1 - damping) * (similarity(i, j) - best);
    }
  }
  responsibility = new_responsibility;
  apcdet::Matrix new_availability(q, q);
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      double update;
      if (i == j) {
        update = 0.0;
        for (std::size_t k = 0; k < q; ++k) {
          if (k != j) update += std::max(0.0, responsibility(k, j));
        }
      } else {
        double support = 0.0;
        for (std::size_t k = 0; k < q; ++k) {
          if (k != i && k != j) support += std::max(0.0, responsibility(k, j));
        }
        update = std::min(0.0, responsibility(j, j) + support);
      }
      new_availability(i, j) = damping * availability(i, j) + (1 - damping) * update;
    }
  }
  availability = new_availability;
}

// Net similarity of an exemplar selection: every exemplar contributes its
// preference, every other point the similarity to its best exemplar.
inline double net_similarity(const apcdet::Matrix& similarity,
                             const std::vector<int>& exemplars) {
  double net = 0.0;
  for (std::size_t i = 0; i < similarity.rows; ++i) {
    const bool is_exemplar =
        std::find(exemplars.begin(), exemplars.end(), static_cast<int>(i)) !=
        exemplars.end();
    if (is_exemplar) {
      net += similarity(i, i);
    } else {
      double best = -std::numeric_limits<double>::infinity();
      for (int e : exemplars) best = std::max(best, similarity(i, static_cast<std::size_t>(e)));
      net += best;
    }
  }
  return net;
}

struct BruteForceResult {
  std::vector<int> exemplars;
  double net = -std::numeric_limits<double>::infinity();
};

// Exhaustive search over all nonempty exemplar subsets (q <= ~16). Ties
// prefer fewer exemplars, then the lexicographically smallest set.
inline BruteForceResult brute_force_exemplars(const apcdet::Matrix& similarity) {
  const std::size_t q = similarity.rows;
  BruteForceResult best;
  for (unsigned mask = 1; mask < (1u << q); ++mask) {
    std::vector<int> exemplars;
    for (std::size_t i = 0; i < q; ++i) {
      if (mask & (1u << i)) exemplars.push_back(static_cast<int>(i));
    }
    const double net = net_similarity(similarity, exemplars);
    const bool better =
        net > best.net ||
        (net == best.net && (exemplars.size() < best.exemplars.size() ||
                             (exemplars.size() == best.exemplars.size() &&
                              exemplars < best.exemplars)));
    if (better) {
      best.net = net;
      best.exemplars = exemplars;
    }
  }
  return best;
}

// Monotonized precision-recall area computed straight from prefix counts.
// Labels are true/false flags of detections already ranked by confidence.
inline double reference_all_points_ap(const std::vector<bool>& is_true_positive,
                                      std::size_t gt_count) {
  double ap = 0.0;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < is_true_positive.size(); ++k) {
    if (!is_true_positive[k]) continue;
    ++tp;
    // Precision of the best-precision cut at or after this recall level.
    double best_precision = 0.0;
    std::size_t tp_ahead = tp;
    for (std::size_t m = k; m < is_true_positive.size(); ++m) {
      if (m > k && is_true_positive[m]) ++tp_ahead;
      best_precision = std::max(best_precision,
                                static_cast<double>(tp_ahead) / static_cast<double>(m + 1));
    }
    ap += best_precision / static_cast<double>(gt_count);
  }
  return ap;
}

}  // namespace oracles
