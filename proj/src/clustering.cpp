#include "apcdet/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "apcdet/errors.hpp"

namespace apcdet {
namespace apc {

namespace {

// Guard against floating-point flicker at the exact decision boundary of
// the candidate test; degenerate inputs sit at a(i,i) + r(i,i) == 0.
constexpr double kCandidateEps = 1e-12;

void validate(const Matrix& similarity, const ApcParams& params) {
  if (similarity.rows == 0 || similarity.rows != similarity.cols) {
    throw ValidationError("apc: similarity matrix must be square and nonempty");
  }
  for (double v : similarity.data) {
    if (!std::isfinite(v)) throw ValidationError("apc: similarity entries must be finite");
  }
  if (!(params.damping >= 0.5 && params.damping < 1.0)) {
    throw ValidationError("apc: damping must lie in [0.5, 1)");
  }
  if (params.max_iter < 1 || params.convergence_window < 1) {
    throw ValidationError("apc: iteration controls must be positive");
  }
}

std::vector<int> candidate_exemplars(const Matrix& responsibility,
                                     const Matrix& availability) {
  std::vector<int> candidates;
  for (std::size_t i = 0; i < responsibility.rows; ++i) {
    if (availability(i, i) + responsibility(i, i) > kCandidateEps) {
      candidates.push_back(static_cast<int>(i));
    }
  }
  return candidates;
}

}  // namespace

void step(const Matrix& similarity, Matrix& responsibility, Matrix& availability,
          double damping) {
  const std::size_t q = similarity.rows;
  const double keep = damping;
  const double mix = 1.0 - damping;

  // Responsibilities: r(i,j) = S(i,j) - max_{k != j}[S(i,k) + a(i,k)],
  // using the row's best and second-best evidence.
  for (std::size_t i = 0; i < q; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    double second = -std::numeric_limits<double>::infinity();
    std::size_t best_index = 0;
    for (std::size_t k = 0; k < q; ++k) {
      const double evidence = similarity(i, k) + availability(i, k);
      if (evidence > best) {
        second = best;
        best = evidence;
        best_index = k;
      } else if (evidence > second) {
        second = evidence;
      }
    }
    for (std::size_t j = 0; j < q; ++j) {
      const double competitor = (j == best_index) ? second : best;
      const double update = similarity(i, j) - competitor;
      responsibility(i, j) = keep * responsibility(i, j) + mix * update;
    }
  }

  // Availabilities from the fresh responsibilities via column sums of the
  // positive parts.
  std::vector<double> positive_sum(q, 0.0);
  for (std::size_t k = 0; k < q; ++k) {
    for (std::size_t j = 0; j < q; ++j) {
      positive_sum[j] += std::max(0.0, responsibility(k, j));
    }
  }
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      double update;
      if (i == j) {
        update = positive_sum[j] - std::max(0.0, responsibility(j, j));
      } else {
        const double support = positive_sum[j] -
                               std::max(0.0, responsibility(i, j)) -
                               std::max(0.0, responsibility(j, j));
        update = std::min(0.0, responsibility(j, j) + support);
      }
      availability(i, j) = keep * availability(i, j) + mix * update;
    }
  }
}

ClusterResult run(const Matrix& similarity, const ApcParams& params) {
  validate(similarity, params);
  const std::size_t q = similarity.rows;

  ClusterResult result;
  if (q == 1) {
    result.assignments = {0};
    result.exemplars = {0};
    result.converged = true;
    return result;
  }

  Matrix responsibility(q, q);
  Matrix availability(q, q);
  std::vector<int> exemplars;
  std::vector<int> last_nonempty;
  int stable = 0;
  for (int iteration = 1; iteration <= params.max_iter; ++iteration) {
    step(similarity, responsibility, availability, params.damping);
    result.iterations = iteration;
    std::vector<int> current = candidate_exemplars(responsibility, availability);
    if (iteration > 1 && current == exemplars) {
      ++stable;
    } else {
      stable = 0;
    }
    exemplars = std::move(current);
    if (!exemplars.empty()) last_nonempty = exemplars;
    if (stable >= params.convergence_window) {
      result.converged = true;
      break;
    }
  }

  if (exemplars.empty()) {
    // Boundary fixed point with no positive self-evidence. Best effort:
    // take the better of the best single exemplar and the last candidate
    // set the messages visited, judged by net similarity.
    std::size_t best_single = 0;
    double best_net = -std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < q; ++e) {
      double net = similarity(e, e);
      for (std::size_t i = 0; i < q; ++i) {
        if (i != e) net += similarity(i, e);
      }
      if (net > best_net) {
        best_net = net;
        best_single = e;
      }
    }
    exemplars = {static_cast<int>(best_single)};
    if (!last_nonempty.empty() && last_nonempty.size() > 1) {
      double visited_net = 0.0;
      for (std::size_t i = 0; i < q; ++i) {
        const bool is_exemplar = std::binary_search(last_nonempty.begin(),
                                                    last_nonempty.end(),
                                                    static_cast<int>(i));
        if (is_exemplar) {
          visited_net += similarity(i, i);
          continue;
        }
        double best = -std::numeric_limits<double>::infinity();
        for (int e : last_nonempty) {
          best = std::max(best, similarity(i, static_cast<std::size_t>(e)));
        }
        visited_net += best;
      }
      if (visited_net > best_net) exemplars = last_nonempty;
    }
  }

  result.exemplars = exemplars;
  result.assignments.assign(q, exemplars.front());
  for (std::size_t i = 0; i < q; ++i) {
    if (std::binary_search(exemplars.begin(), exemplars.end(), static_cast<int>(i))) {
      result.assignments[i] = static_cast<int>(i);
      continue;
    }
    double best_similarity = -std::numeric_limits<double>::infinity();
    int best_exemplar = exemplars.front();
    for (int e : exemplars) {
      const double s = similarity(i, static_cast<std::size_t>(e));
      if (s > best_similarity) {
        best_similarity = s;
        best_exemplar = e;
      }
    }
    result.assignments[i] = best_exemplar;
  }
  return result;
}

}  // namespace apc
}  // namespace apcdet
