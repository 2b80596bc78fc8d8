#pragma once

#include <vector>

#include "apcdet/matrix.hpp"

namespace apcdet {
namespace apc {

/// Message-passing controls. Damping mixes each new message with the old one
/// (new = damping * old + (1 - damping) * update); raw updates oscillate on
/// symmetric inputs, so damping below 0.5 is rejected.
struct ApcParams {
  double damping = 0.5;
  int max_iter = 200;
  int convergence_window = 15;  // iterations the exemplar set must stay fixed
};

struct ClusterResult {
  std::vector<int> assignments;  // per point, the index of its exemplar
  std::vector<int> exemplars;    // sorted, self-assigned
  int iterations = 0;
  bool converged = false;
};

/// One damped responsibility/availability sweep over a square similarity
/// matrix whose diagonal holds the preferences. Messages are updated in
/// place: responsibilities from the availabilities of the previous
/// iteration, then availabilities from the fresh responsibilities.
void step(const Matrix& similarity, Matrix& responsibility, Matrix& availability,
          double damping);

/// Runs message passing until the candidate exemplar set
/// {i : availability(i,i) + responsibility(i,i) > 0} is unchanged for
/// convergence_window iterations or max_iter is reached. Always returns a
/// usable result: if no candidate emerges, the point with the largest
/// self-evidence becomes the sole exemplar (ties to the lowest index).
/// Non-exemplar points attach to the exemplar with the highest similarity.
ClusterResult run(const Matrix& similarity, const ApcParams& params = {});

}  // namespace apc
}  // namespace apcdet
