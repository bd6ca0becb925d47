#pragma once

// Second-stage refinement. Coordinates of the first-stage estimate that sit
// within gamma of a decision boundary keep both adjacent levels as
// candidates; the M candidate vectors nearest to the estimate are then
// enumerated recursively through Hamming-distance-one neighbors, and the best
// of them under a likelihood objective is returned.
//
// Every distance comparison uses one total order: squared Euclidean distance
// to the estimate, ties broken lexicographically with larger coordinate values
// first (the slicer's tie rule). The recursive enumeration and the brute-force
// reference share that order, so their outputs can be compared exactly.

#include <cstddef>
#include <vector>

#include "onebit/ml_detect.hpp"
#include "onebit/model.hpp"

namespace onebit {

/// Boundary threshold for a modulation: 1/(2 sqrt 2) for QPSK and
/// 1/(2 sqrt 10) for 16-QAM.
double default_gamma(Modulation modulation);

struct CandidateSets {
  RVector boundary;                       // nearest decision boundary b_i
  std::vector<std::vector<double>> sets;  // A_i, ascending, 1 or 2 levels
  std::vector<std::size_t> ambiguous;     // indices i with |A_i| = 2

  std::size_t dims() const { return sets.size(); }
  std::size_t two_element_count() const { return ambiguous.size(); }
  /// |A| = 2^A, saturating at SIZE_MAX.
  std::size_t total_size() const;
  bool contains(const RVector& x) const;
};

CandidateSets candidate_sets(const RVector& soft, double gamma,
                             const Constellation& constellation);

std::size_t hamming(const RVector& a, const RVector& b);

double squared_distance(const RVector& x, const RVector& soft);

/// Strict "a comes before b" in the distance order around `soft`.
bool precedes(const RVector& a, double dist_a, const RVector& b, double dist_b);

/// Members of the candidate product at Hamming distance exactly one from x.
std::vector<RVector> neighbors(const RVector& x, const CandidateSets& cand);

/// The symbol-by-symbol decision: every coordinate at its nearest candidate.
RVector nearest_member(const RVector& soft, const CandidateSets& cand);

inline constexpr std::size_t kMaxBruteForceSize = std::size_t{1} << 20;

/// Sorts the whole candidate product and returns the first min(M, |A|).
/// Throws SearchSpaceTooLarge when |A| > 2^20.
std::vector<RVector> brute_force_top_m(const RVector& soft,
                                       const CandidateSets& cand,
                                       std::size_t m);

/// The M nearest candidate vectors, in order, found by the recursive
/// neighbor-list construction. Stops early if the product is exhausted.
std::vector<RVector> nearest_vectors(const RVector& soft,
                                     const CandidateSets& cand, std::size_t m);

struct NnSearchResult {
  RVector x;                     // selected real-lifted symbol vector
  double cost = 0.0;             // objective at x
  std::vector<RVector> visited;  // vectors evaluated, nearest first
  bool exhaustive = false;       // true when |A| <= M
};

/// Full second stage. If |A| <= M the whole product is scored; otherwise the
/// M nearest vectors are. Ties in the objective go to the nearer vector.
NnSearchResult nn_search(const RVector& soft, double gamma, std::size_t m,
                         const Objective& objective,
                         const Constellation& constellation);

}  // namespace onebit
