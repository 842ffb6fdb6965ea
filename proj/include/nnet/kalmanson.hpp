#pragma once

#include <array>
#include <optional>
#include <set>
#include <vector>

#include "nnet/agglomerate.hpp"
#include "nnet/dissimilarity.hpp"
#include "nnet/error.hpp"
#include "nnet/ordering.hpp"
#include "nnet/split.hpp"

namespace nnet {

// Quadruple with the three pairwise sums, used for violation reports.
template <Scalar T>
struct QuadrupleReport {
  std::array<Taxon, 4> taxa{};  // x_i, x_j, x_k, x_l in ordering position order when relevant
  T ij_kl{};                    // d(a,b) + d(c,d)
  T ik_jl{};                    // d(a,c) + d(b,d)
  T il_jk{};                    // d(a,d) + d(b,c)
};

template <Scalar T>
QuadrupleReport<T> quadruple(const DissimilarityMap<T>& d, Taxon a, Taxon b, Taxon c, Taxon e) {
  return {{a, b, c, e}, d(a, b) + d(c, e), d(a, c) + d(b, e), d(a, e) + d(b, c)};
}

// First quadruple (positions i<j<k<l) where a Kalmanson inequality fails.
template <Scalar T>
std::optional<QuadrupleReport<T>> find_kalmanson_violation(const DissimilarityMap<T>& d, const CircularOrdering& pi,
                                                          const T& tol) {
  std::size_t n = d.size();
  if (pi.size() != n) throw InputError("ordering and map sizes differ");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k)
        for (std::size_t l = k + 1; l < n; ++l) {
          auto q = quadruple(d, pi[i], pi[j], pi[k], pi[l]);
          if (q.ij_kl > q.ik_jl + tol || q.il_jk > q.ik_jl + tol) return q;
        }
  return std::nullopt;
}

template <Scalar T>
bool is_kalmanson(const DissimilarityMap<T>& d, const CircularOrdering& pi,
                  const T& tol = scalar_traits<T>::default_tolerance()) {
  return !find_kalmanson_violation(d, pi, tol);
}

// First quadruple whose largest pairwise sum is attained only once.
template <Scalar T>
std::optional<QuadrupleReport<T>> find_four_point_violation(const DissimilarityMap<T>& d, const T& tol) {
  std::size_t n = d.size();
  for (Taxon a = 0; a < n; ++a)
    for (Taxon b = a + 1; b < n; ++b)
      for (Taxon c = b + 1; c < n; ++c)
        for (Taxon e = c + 1; e < n; ++e) {
          auto q = quadruple(d, a, b, c, e);
          std::array<T, 3> s{q.ij_kl, q.ik_jl, q.il_jk};
          std::sort(s.begin(), s.end());
          if (s[2] - s[1] > tol) return q;
        }
  return std::nullopt;
}

template <Scalar T>
bool satisfies_four_point(const DissimilarityMap<T>& d, const T& tol = scalar_traits<T>::default_tolerance()) {
  return !find_four_point_violation(d, tol);
}

// Quartet ab|ce stored canonically: each pair sorted, pairs sorted.
struct Quartet {
  std::array<Taxon, 2> left{}, right{};

  Quartet() = default;
  Quartet(Taxon a, Taxon b, Taxon c, Taxon e) {
    left = {std::min(a, b), std::max(a, b)};
    right = {std::min(c, e), std::max(c, e)};
    if (right < left) std::swap(left, right);
  }
  friend auto operator<=>(const Quartet&, const Quartet&) = default;
};

// Quartets tied to an ordering: for positions i<j<k<l, (ij;kl) and (il;jk).
struct QuartetSet {
  CircularOrdering ordering;
  std::set<Quartet> quartets;

  bool contains(const Quartet& q) const { return quartets.count(q) > 0; }
  std::size_t size() const { return quartets.size(); }
};

// W_pi: every quartet compatible with pi.
inline QuartetSet compatible_quartets(const CircularOrdering& pi) {
  QuartetSet out{pi, {}};
  std::size_t n = pi.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k)
        for (std::size_t l = k + 1; l < n; ++l) {
          out.quartets.emplace(pi[i], pi[j], pi[k], pi[l]);
          out.quartets.emplace(pi[i], pi[l], pi[j], pi[k]);
        }
  return out;
}

// W_delta: quartets given by the strict Kalmanson inequalities.
template <Scalar T>
QuartetSet strict_quartets(const DissimilarityMap<T>& d, const CircularOrdering& pi,
                           const T& tol = scalar_traits<T>::default_tolerance()) {
  if (!is_kalmanson(d, pi, tol)) throw InputError("strict_quartets needs a Kalmanson map for the ordering");
  QuartetSet out{pi, {}};
  std::size_t n = d.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k)
        for (std::size_t l = k + 1; l < n; ++l) {
          auto q = quadruple(d, pi[i], pi[j], pi[k], pi[l]);
          if (q.ij_kl < q.ik_jl - tol) out.quartets.emplace(pi[i], pi[j], pi[k], pi[l]);
          if (q.il_jk < q.ik_jl - tol) out.quartets.emplace(pi[i], pi[l], pi[j], pi[k]);
        }
  return out;
}

enum class KalmansonSearch { BruteForce, NeighborNet };

// Brute force tries every canonical ordering (n <= 9). The neighbor-net
// route runs the balanced TSP agglomeration and verifies its output, so it
// can miss an ordering on inputs that are not Kalmanson.
template <Scalar T>
std::optional<CircularOrdering> find_kalmanson_ordering(const DissimilarityMap<T>& d,
                                                        KalmansonSearch mode = KalmansonSearch::NeighborNet,
                                                        const T& tol = scalar_traits<T>::default_tolerance()) {
  std::size_t n = d.size();
  if (mode == KalmansonSearch::BruteForce) {
    if (n < 4 || n > 9) throw InputError("brute-force ordering search needs 4 <= n <= 9");
    std::optional<CircularOrdering> found;
    for_each_canonical_ordering(n, [&](const CircularOrdering& pi) {
      if (is_kalmanson(d, pi, tol)) {
        found = pi;
        return false;
      }
      return true;
    });
    return found;
  }
  auto res = run_neighbor_net(d, WeightingScheme::balanced_tsp());
  if (is_kalmanson(d, res.ordering, tol)) return res.ordering;
  return std::nullopt;
}

// Sup norm of a symmetric perturbation.
template <Scalar T>
T sup_norm(const std::vector<std::vector<T>>& noise) {
  T worst(0);
  for (const auto& row : noise)
    for (const auto& v : row) worst = std::max(worst, abs_value(v));
  return worst;
}

// Runs neighbor-net on metric_from_splits(sys) + noise and reports whether
// every split of sys is circular for the output ordering. Requires every
// weight positive and sup|noise| < min weight / 2.
template <Scalar T>
bool radius_perturbation_check(const WeightedSplitSystem<T>& sys, const std::vector<std::vector<T>>& noise) {
  std::size_t n = sys.n();
  if (sys.empty()) throw InputError("split system is empty");
  T eps = sys.entries().front().weight;
  for (const auto& e : sys) eps = std::min(eps, e.weight);
  if (!(eps > T(0))) throw InputError("every split weight must be positive");
  if (noise.size() != n) throw InputError("noise must be n x n");
  for (std::size_t i = 0; i < n; ++i) {
    if (noise[i].size() != n) throw InputError("noise must be n x n");
    if (noise[i][i] != T(0)) throw InputError("noise must have a zero diagonal");
    for (std::size_t j = 0; j < n; ++j)
      if (noise[i][j] != noise[j][i]) throw InputError("noise must be symmetric");
  }
  if (!(T(2) * sup_norm(noise) < eps)) throw InputError("noise exceeds half the smallest split weight");
  auto base = metric_from_splits(sys);
  DissimilarityMap<T> d(n);
  for (Taxon i = 0; i < n; ++i)
    for (Taxon j = i + 1; j < n; ++j) d.set(i, j, base(i, j) + noise[i][j]);
  auto res = run_neighbor_net(d, WeightingScheme::balanced_tsp());
  for (const auto& e : sys)
    if (!is_circular_split(e.split, res.ordering)) return false;
  return true;
}

}  // namespace nnet
