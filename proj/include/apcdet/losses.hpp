#pragma once

#include <cstddef>
#include <vector>

#include "apcdet/matching.hpp"
#include "apcdet/matrix.hpp"

namespace apcdet {

/// Detector outputs for one image: per-box class probabilities (rows on the
/// probability simplex) and per-box offset predictions.
struct PredictionMatrix {
  Matrix class_probs;   // n x class_count
  Matrix box_offsets;   // n x 4
};

struct LossBreakdown {
  double classification = 0.0;  // unnormalized sum
  double localization = 0.0;    // unnormalized sum
  double total = 0.0;           // (classification + weight * localization) / positives
  std::size_t positive_count = 0;
  bool no_positives = false;    // total forced to 0 because nothing matched
};

/// Numerically stable softmax (max-subtracted).
std::vector<double> softmax(const std::vector<double>& logits);

/// Cross-entropy over positives against their one-hot targets plus the
/// background log-likelihood over negatives. Probabilities are clamped at
/// 1e-12 before the log, so zero entries stay finite. When
/// negative_positive_cap > 0, only the hardest negatives are kept, at most
/// cap * |positive| of them.
double classification_loss(const Matrix& predicted,
                           const Matrix& target,
                           const std::vector<std::size_t>& positive,
                           const std::vector<std::size_t>& negative,
                           int background_index = 0,
                           double negative_positive_cap = 0.0);

/// 0.5 x^2 inside the unit interval, |x| - 0.5 outside.
double smooth_l1(double x);

/// Sum of smooth_l1 over the four offset residuals of every positive row.
double localization_loss(const Matrix& predicted,
                         const Matrix& target,
                         const std::vector<std::size_t>& positive);

LossBreakdown total_loss(const PredictionMatrix& prediction,
                         const MatchResult& match,
                         double localization_weight = 1.0,
                         int background_index = 0);

}  // namespace apcdet
