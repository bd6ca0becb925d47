#include "onebit/nn_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "onebit/errors.hpp"

namespace onebit {

namespace {

struct Ranked {
  RVector x;
  double dist;
};

bool ranked_before(const Ranked& a, const Ranked& b) {
  return precedes(a.x, a.dist, b.x, b.dist);
}

std::vector<Ranked> sorted_neighbors(const RVector& x, const RVector& soft,
                                     const CandidateSets& cand) {
  std::vector<Ranked> out;
  for (RVector& v : neighbors(x, cand)) {
    const double d = squared_distance(v, soft);
    out.push_back({std::move(v), d});
  }
  std::sort(out.begin(), out.end(), ranked_before);
  return out;
}

void check_dims(const RVector& soft, const CandidateSets& cand) {
  if (static_cast<std::size_t>(soft.size()) != cand.dims()) {
    throw std::invalid_argument("estimate and candidate sets differ in length");
  }
}

}  // namespace

double default_gamma(Modulation modulation) {
  return modulation == Modulation::kQpsk ? 1.0 / (2.0 * std::sqrt(2.0))
                                         : 1.0 / (2.0 * std::sqrt(10.0));
}

std::size_t CandidateSets::total_size() const {
  const std::size_t a = ambiguous.size();
  if (a >= std::numeric_limits<std::size_t>::digits) {
    return std::numeric_limits<std::size_t>::max();
  }
  return std::size_t{1} << a;
}

bool CandidateSets::contains(const RVector& x) const {
  if (static_cast<std::size_t>(x.size()) != sets.size()) return false;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (std::find(sets[i].begin(), sets[i].end(), x(i)) == sets[i].end()) {
      return false;
    }
  }
  return true;
}

CandidateSets candidate_sets(const RVector& soft, double gamma,
                             const Constellation& constellation) {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("candidate_sets: gamma must be > 0");
  }
  const auto& bounds = constellation.boundaries;
  const auto& levels = constellation.levels;
  CandidateSets c;
  c.boundary.resize(soft.size());
  c.sets.resize(static_cast<std::size_t>(soft.size()));
  for (Eigen::Index i = 0; i < soft.size(); ++i) {
    const double v = soft(i);
    std::size_t j = 0;
    for (std::size_t t = 1; t < bounds.size(); ++t) {
      if (std::abs(bounds[t] - v) < std::abs(bounds[j] - v)) j = t;
    }
    c.boundary(i) = bounds[j];
    auto& set = c.sets[static_cast<std::size_t>(i)];
    if (std::abs(v - bounds[j]) > gamma) {
      set = {constellation.slice(v)};
    } else {
      // boundary j separates levels j and j + 1
      set = {levels[j], levels[j + 1]};
      c.ambiguous.push_back(static_cast<std::size_t>(i));
    }
  }
  return c;
}

std::size_t hamming(const RVector& a, const RVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("hamming: length mismatch");
  }
  std::size_t d = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) d += a(i) != b(i) ? 1 : 0;
  return d;
}

double squared_distance(const RVector& x, const RVector& soft) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double e = x(i) - soft(i);
    d += e * e;
  }
  return d;
}

bool precedes(const RVector& a, double dist_a, const RVector& b,
              double dist_b) {
  if (dist_a != dist_b) return dist_a < dist_b;
  // larger coordinate values first, consistent with the slicer's tie rule
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

std::vector<RVector> neighbors(const RVector& x, const CandidateSets& cand) {
  if (!cand.contains(x)) {
    throw std::invalid_argument("neighbors: x is not in the candidate product");
  }
  std::vector<RVector> out;
  out.reserve(cand.ambiguous.size());
  for (std::size_t i : cand.ambiguous) {
    const auto& set = cand.sets[i];
    RVector v = x;
    const auto idx = static_cast<Eigen::Index>(i);
    v(idx) = v(idx) == set[0] ? set[1] : set[0];
    out.push_back(std::move(v));
  }
  return out;
}

RVector nearest_member(const RVector& soft, const CandidateSets& cand) {
  check_dims(soft, cand);
  RVector x(soft.size());
  for (std::size_t i = 0; i < cand.dims(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    const auto& set = cand.sets[i];
    double best = set[0];
    if (set.size() == 2) {
      const double e0 = (set[0] - soft(idx)) * (set[0] - soft(idx));
      const double e1 = (set[1] - soft(idx)) * (set[1] - soft(idx));
      if (e1 <= e0) best = set[1];
    }
    x(idx) = best;
  }
  return x;
}

std::vector<RVector> brute_force_top_m(const RVector& soft,
                                       const CandidateSets& cand,
                                       std::size_t m) {
  check_dims(soft, cand);
  const std::size_t total = cand.total_size();
  if (total > kMaxBruteForceSize) {
    throw SearchSpaceTooLarge("brute_force_top_m: |A| = 2^" +
                              std::to_string(cand.two_element_count()) +
                              " exceeds the 2^20 guard");
  }
  std::vector<Ranked> all;
  all.reserve(total);
  RVector base(soft.size());
  for (std::size_t i = 0; i < cand.dims(); ++i) {
    base(static_cast<Eigen::Index>(i)) = cand.sets[i][0];
  }
  for (std::size_t mask = 0; mask < total; ++mask) {
    RVector v = base;
    for (std::size_t b = 0; b < cand.ambiguous.size(); ++b) {
      if ((mask >> b) & 1U) {
        const std::size_t i = cand.ambiguous[b];
        v(static_cast<Eigen::Index>(i)) = cand.sets[i][1];
      }
    }
    const double d = squared_distance(v, soft);
    all.push_back({std::move(v), d});
  }
  const std::size_t keep = std::min(m, total);
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep),
                    all.end(), ranked_before);
  std::vector<RVector> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(std::move(all[i].x));
  return out;
}

std::vector<RVector> nearest_vectors(const RVector& soft,
                                     const CandidateSets& cand, std::size_t m) {
  check_dims(soft, cand);
  std::vector<RVector> found;
  if (m == 0) return found;
  found.push_back(nearest_member(soft, cand));

  // lists[p] holds N(x_p) sorted by distance; heads[p] skips removed entries
  std::vector<std::vector<Ranked>> lists;
  std::vector<std::size_t> heads;
  if (m > 1) {
    lists.push_back(sorted_neighbors(found[0], soft, cand));
    heads.push_back(0);
  }

  for (std::size_t step = 2; step <= m; ++step) {
    // the next nearest vector is the best head among the neighbor lists
    const Ranked* best = nullptr;
    for (std::size_t p = 0; p < lists.size(); ++p) {
      if (heads[p] >= lists[p].size()) continue;
      const Ranked& h = lists[p][heads[p]];
      if (best == nullptr || ranked_before(h, *best)) best = &h;
    }
    if (best == nullptr) break;  // product exhausted
    const RVector next = best->x;
    found.push_back(next);
    if (step == m) break;

    // a removed vector can only sit at the head of a sorted list
    for (std::size_t p = 0; p < lists.size(); ++p) {
      if (heads[p] < lists[p].size() && lists[p][heads[p]].x == next) ++heads[p];
    }
    std::vector<Ranked> fresh = sorted_neighbors(next, soft, cand);
    std::size_t head = 0;
    for (std::size_t p = 0; p + 1 < found.size(); ++p) {
      if (head < fresh.size() && fresh[head].x == found[p]) ++head;
    }
    lists.push_back(std::move(fresh));
    heads.push_back(head);
  }
  return found;
}

NnSearchResult nn_search(const RVector& soft, double gamma, std::size_t m,
                         const Objective& objective,
                         const Constellation& constellation) {
  if (m < 1) throw std::invalid_argument("nn_search: M must be >= 1");
  const CandidateSets cand = candidate_sets(soft, gamma, constellation);
  NnSearchResult r;
  r.exhaustive = cand.total_size() <= m;
  r.visited = r.exhaustive ? brute_force_top_m(soft, cand, m)
                           : nearest_vectors(soft, cand, m);
  for (std::size_t i = 0; i < r.visited.size(); ++i) {
    const double c = objective(r.visited[i]);
    if (i == 0 || c < r.cost) {
      r.cost = c;
      r.x = r.visited[i];
    }
  }
  return r;
}

}  // namespace onebit
