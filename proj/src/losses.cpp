#include "apcdet/losses.hpp"

#include <algorithm>
#include <cmath>

#include "apcdet/errors.hpp"

namespace apcdet {

namespace {

constexpr double kLogFloor = 1e-12;

double clamped_log(double p) { return std::log(std::max(p, kLogFloor)); }

}  // namespace

std::vector<double> softmax(const std::vector<double>& logits) {
  if (logits.empty()) throw ValidationError("softmax: empty input");
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> probs(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - peak);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

double classification_loss(const Matrix& predicted,
                           const Matrix& target,
                           const std::vector<std::size_t>& positive,
                           const std::vector<std::size_t>& negative,
                           int background_index,
                           double negative_positive_cap) {
  if (predicted.rows != target.rows || predicted.cols != target.cols) {
    throw ValidationError("classification_loss: shape mismatch");
  }
  double loss = 0.0;
  for (std::size_t i : positive) {
    for (std::size_t c = 0; c < predicted.cols; ++c) {
      if (target(i, c) != 0.0) {
        loss -= target(i, c) * clamped_log(predicted(i, c));
      }
    }
  }
  const auto bg = static_cast<std::size_t>(background_index);
  if (negative_positive_cap > 0.0) {
    std::vector<double> terms;
    terms.reserve(negative.size());
    for (std::size_t j : negative) terms.push_back(-clamped_log(predicted(j, bg)));
    std::sort(terms.begin(), terms.end(), std::greater<>());
    const auto keep = std::min<std::size_t>(
        terms.size(),
        static_cast<std::size_t>(negative_positive_cap * static_cast<double>(positive.size())));
    for (std::size_t k = 0; k < keep; ++k) loss += terms[k];
  } else {
    for (std::size_t j : negative) loss -= clamped_log(predicted(j, bg));
  }
  return loss;
}

double smooth_l1(double x) {
  const double magnitude = std::abs(x);
  return magnitude < 1.0 ? 0.5 * x * x : magnitude - 0.5;
}

double localization_loss(const Matrix& predicted,
                         const Matrix& target,
                         const std::vector<std::size_t>& positive) {
  if (predicted.rows != target.rows || predicted.cols != target.cols) {
    throw ValidationError("localization_loss: shape mismatch");
  }
  double loss = 0.0;
  for (std::size_t i : positive) {
    for (std::size_t c = 0; c < predicted.cols; ++c) {
      loss += smooth_l1(predicted(i, c) - target(i, c));
    }
  }
  return loss;
}

LossBreakdown total_loss(const PredictionMatrix& prediction,
                         const MatchResult& match,
                         double localization_weight,
                         int background_index) {
  if (localization_weight < 0.0) {
    throw ValidationError("total_loss: weight must be nonnegative");
  }
  LossBreakdown breakdown;
  breakdown.classification =
      classification_loss(prediction.class_probs, match.class_targets,
                          match.positive, match.negative, background_index);
  breakdown.localization =
      localization_loss(prediction.box_offsets, match.box_targets, match.positive);
  breakdown.positive_count = match.positive.size();
  if (breakdown.positive_count == 0) {
    breakdown.no_positives = true;
    breakdown.total = 0.0;
  } else {
    breakdown.total =
        (breakdown.classification + localization_weight * breakdown.localization) /
        static_cast<double>(breakdown.positive_count);
  }
  return breakdown;
}

}  // namespace apcdet
