#pragma once

// Balanced length of a map with respect to a partial circular ordering or a
// split system, adjacency counts, and the join decrease used by the greedy
// selection. The enumerators are oracles; the engine never calls them.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <set>
#include <vector>

#include "nnet/agglomerate.hpp"
#include "nnet/block_state.hpp"
#include "nnet/counting.hpp"
#include "nnet/dissimilarity.hpp"
#include "nnet/error.hpp"
#include "nnet/ordering.hpp"

namespace nnet {

inline constexpr std::uint64_t default_enumeration_cap = 1'000'000;

// eta(i,j): number of orderings in a family in which i and j are adjacent.
struct EtaTable {
  std::size_t n = 0;
  std::uint64_t orderings = 0;
  std::vector<std::uint64_t> counts;

  explicit EtaTable(std::size_t n_ = 0) : n(n_), counts(n_ * n_, 0) {}
  std::uint64_t operator()(Taxon i, Taxon j) const { return counts[i * n + j]; }

  void add(const CircularOrdering& pi) {
    ++orderings;
    for (std::size_t p = 0; p < n; ++p) {
      Taxon a = pi[p], b = pi[p + 1];
      ++counts[a * n + b];
      ++counts[b * n + a];
    }
  }
};

inline BigInt count_consistent_orderings(const PartialCircularOrdering& c) {
  std::size_t m = c.size();
  if (m <= 1) return 1;
  BigInt out = factorial(static_cast<unsigned>(m - 1));
  for (std::size_t r = 0; r < m; ++r) out *= c.endpoints(r).size();
  return out / 2;
}

namespace detail {
inline void check_cap(const BigInt& count, std::uint64_t cap) {
  if (count > cap) {
    throw CapExceeded("enumeration of " + count.str() + " orderings exceeds the cap of " + std::to_string(cap));
  }
}
}  // namespace detail

inline std::vector<CircularOrdering> enumerate_consistent_orderings(const PartialCircularOrdering& c,
                                                                    std::uint64_t cap = default_enumeration_cap) {
  detail::check_cap(count_consistent_orderings(c), cap);
  std::size_t m = c.size();
  if (m == 1) return {CircularOrdering(c.block(0))};
  // Block 0 fixed first and forward; permute and orient the rest.
  std::set<CircularOrdering> seen;
  std::vector<std::size_t> rest(m - 1);
  std::iota(rest.begin(), rest.end(), std::size_t{1});
  do {
    std::vector<std::size_t> flippable;
    for (std::size_t r : rest)
      if (c.block(r).size() > 1) flippable.push_back(r);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << flippable.size()); ++mask) {
      std::vector<Taxon> seq = c.block(0);
      for (std::size_t r : rest) {
        const auto& b = c.block(r);
        auto pos = std::find(flippable.begin(), flippable.end(), r);
        bool flip = pos != flippable.end() && ((mask >> (pos - flippable.begin())) & 1);
        if (flip) seq.insert(seq.end(), b.rbegin(), b.rend());
        else seq.insert(seq.end(), b.begin(), b.end());
      }
      seen.insert(CircularOrdering(seq));
    }
  } while (std::next_permutation(rest.begin(), rest.end()));
  return {seen.begin(), seen.end()};
}

inline EtaTable eta_of(const std::vector<CircularOrdering>& orderings, std::size_t n) {
  EtaTable eta(n);
  for (const auto& pi : orderings) eta.add(pi);
  return eta;
}

inline EtaTable eta_table(const PartialCircularOrdering& c, std::uint64_t cap = default_enumeration_cap) {
  return eta_of(enumerate_consistent_orderings(c, cap), c.n());
}

// (1 / (2|o|)) * sum over unordered pairs of eta * d.
template <Scalar T>
T length_from_eta(const DissimilarityMap<T>& d, const EtaTable& eta) {
  if (eta.orderings == 0) throw InputError("no consistent ordering");
  T acc(0);
  for (Taxon i = 0; i < d.size(); ++i)
    for (Taxon j = i + 1; j < d.size(); ++j)
      if (eta(i, j)) acc += T(static_cast<long long>(eta(i, j))) * d(i, j);
  return acc / T(static_cast<long long>(2 * eta.orderings));
}

// Average over the orderings of half the tour length.
template <Scalar T>
T average_half_tour(const DissimilarityMap<T>& d, const std::vector<CircularOrdering>& orderings) {
  if (orderings.empty()) throw InputError("no consistent ordering");
  T acc(0);
  for (const auto& pi : orderings)
    for (std::size_t p = 0; p < pi.size(); ++p) acc += d(pi[p], pi[p + 1]);
  return acc / T(static_cast<long long>(2 * orderings.size()));
}

template <Scalar T>
T balanced_length(const DissimilarityMap<T>& d, const PartialCircularOrdering& c,
                  std::uint64_t cap = default_enumeration_cap) {
  if (c.n() != d.size()) throw InputError("partial ordering and map sizes differ");
  return length_from_eta(d, eta_table(c, cap));
}

// Blocks r and s (indices into c.blocks()) joined by the edge (i, j).
inline PartialCircularOrdering extend(const PartialCircularOrdering& c, std::size_t r, std::size_t s, Taxon i,
                                      Taxon j) {
  if (r == s || r >= c.size() || s >= c.size()) throw InputError("invalid blocks for extension");
  std::vector<Taxon> left = c.block(r), right = c.block(s);
  if (left.back() != i) std::reverse(left.begin(), left.end());
  if (right.front() != j) std::reverse(right.begin(), right.end());
  if (left.back() != i || right.front() != j) throw InputError("extension edge must join block endpoints");
  std::vector<std::vector<Taxon>> blocks;
  for (std::size_t t = 0; t < c.size(); ++t) {
    if (t == s) continue;
    if (t == r) {
      left.insert(left.end(), right.begin(), right.end());
      blocks.push_back(left);
    } else {
      blocks.push_back(c.block(t));
    }
  }
  return PartialCircularOrdering(c.n(), std::move(blocks));
}

// Orderings of o(C) in which some end of block r is adjacent to some end of
// block s.
inline std::vector<CircularOrdering> enumerate_join_orderings(const PartialCircularOrdering& c, std::size_t r,
                                                              std::size_t s,
                                                              std::uint64_t cap = default_enumeration_cap) {
  if (r == s || r >= c.size() || s >= c.size()) throw InputError("invalid blocks for join");
  std::vector<CircularOrdering> out;
  for (const auto& pi : enumerate_consistent_orderings(c, cap)) {
    bool joined = false;
    for (Taxon i : c.endpoints(r))
      for (Taxon j : c.endpoints(s)) joined = joined || pi.adjacent(i, j);
    if (joined) out.push_back(pi);
  }
  return out;
}

template <Scalar T>
T balanced_length_of_join(const DissimilarityMap<T>& d, const PartialCircularOrdering& c, std::size_t r,
                          std::size_t s, std::uint64_t cap = default_enumeration_cap) {
  return length_from_eta(d, eta_of(enumerate_join_orderings(c, r, s, cap), c.n()));
}

namespace detail {
template <Scalar T>
std::size_t block_index(const BlockDistanceState<T>& st, std::size_t slot) {
  auto act = st.active();
  auto it = std::find(act.begin(), act.end(), slot);
  if (it == act.end()) throw InputError("inactive block");
  return static_cast<std::size_t>(it - act.begin());
}

template <Scalar T>
void require_balanced_tsp(const BlockDistanceState<T>& st) {
  for (std::size_t r : st.active()) {
    const auto& p = st.path(r);
    for (std::size_t k = 0; k < p.size(); ++k) {
      T want = p.size() == 1 ? T(1) : (k == 0 || k + 1 == p.size()) ? T(1) / T(2) : T(0);
      if (st.mu(p[k]) != want) throw InputError("closed form needs the balanced TSP weighting");
    }
  }
}
}  // namespace detail

// Closed-form eta for the join family C_{r,s} (slots r, s), balanced TSP
// weighting, m >= 3. Returned as a dense n x n matrix plus |o(C_{r,s})|.
template <Scalar T>
std::pair<std::vector<T>, T> eta_join_closed_form(const BlockDistanceState<T>& st, std::size_t r, std::size_t s) {
  detail::require_balanced_tsp(st);
  std::size_t m = st.m(), n = st.n();
  if (m < 3) throw InputError("closed form needs at least 3 blocks");
  if (r == s) throw InputError("closed form needs two distinct blocks");
  T o(count_consistent_orderings(st.partial_ordering()).template convert_to<long long>());
  T m1(static_cast<long>(m - 1)), m2(static_cast<long>(m - 2));
  std::vector<T> eta(n * n, T(0));
  std::vector<std::size_t> slot(n);
  for (std::size_t t : st.active())
    for (Taxon x : st.path(t)) slot[x] = t;
  for (std::size_t t : st.active()) {
    const auto& p = st.path(t);
    for (std::size_t k = 1; k < p.size(); ++k) {
      eta[p[k - 1] * n + p[k]] = eta[p[k] * n + p[k - 1]] = T(2) * o / m1;
    }
  }
  for (Taxon a = 0; a < n; ++a) {
    for (Taxon b = 0; b < n; ++b) {
      std::size_t ta = slot[a], tb = slot[b];
      if (ta == tb) continue;
      T w = st.mu(a) * st.mu(b);
      bool ar = ta == r || ta == s, br = tb == r || tb == s;
      if (ar && br) eta[a * n + b] = T(2) * o * w / m1;
      else if (!ar && !br) eta[a * n + b] = T(4) * o * w / (m1 * m2);
      else eta[a * n + b] = T(2) * o * w / (m1 * m2);
    }
  }
  return {eta, T(2) * o / m1};
}

// Balanced length of the current partial ordering under balanced TSP
// weights: half the within-block path length plus A / (m - 1), A being the
// sum of block distances over unordered block pairs.
template <Scalar T>
T balanced_length_closed_form(const BlockDistanceState<T>& st) {
  detail::require_balanced_tsp(st);
  const auto& d = st.dissimilarity();
  auto act = st.active();
  T within(0), across(0);
  for (std::size_t r : act) {
    const auto& p = st.path(r);
    for (std::size_t k = 1; k < p.size(); ++k) within += d(p[k - 1], p[k]);
  }
  if (act.size() == 1) {
    const auto& p = st.path(act[0]);
    return (within + d(p.front(), p.back())) / T(2);
  }
  for (std::size_t a = 0; a < act.size(); ++a)
    for (std::size_t b = a + 1; b < act.size(); ++b) across += st.block_distance(act[a], act[b]);
  return within / T(2) + across / T(static_cast<long>(act.size() - 1));
}

// Balanced-length decrease from joining C_r and C_s:
// l(C) - l(C_{r,s}) = -(A/(m-1) + Q/2) / (m-2), and 0 when m = 2.
template <Scalar T>
T z_criterion(const BlockDistanceState<T>& st, std::size_t r, std::size_t s) {
  if (r == s) throw InputError("z_criterion needs two distinct blocks");
  std::size_t m = st.m();
  if (m == 2) return T(0);
  auto act = st.active();
  T across(0);
  for (std::size_t a = 0; a < act.size(); ++a)
    for (std::size_t b = a + 1; b < act.size(); ++b) across += st.block_distance(act[a], act[b]);
  T q = q_criterion(st, r, s);
  return -(across / T(static_cast<long>(m - 1)) + q / T(2)) / T(static_cast<long>(m - 2));
}

// The literal expression -(1/(m-1)) sum_{t != r} delta(C_r,C_t) - Q/2. Kept
// for comparison; it does not equal the length decrease.
template <Scalar T>
T z_criterion_literal(const BlockDistanceState<T>& st, std::size_t r, std::size_t s) {
  if (r == s) throw InputError("z_criterion needs two distinct blocks");
  return -st.row_sum(r) / T(static_cast<long>(st.m() - 1)) - q_criterion(st, r, s) / T(2);
}

// w(C_r C_s : C_t C_u)
template <Scalar T>
T neighborliness(const BlockDistanceState<T>& st, std::size_t r, std::size_t s, std::size_t t, std::size_t u) {
  auto D = [&](std::size_t a, std::size_t b) { return st.block_distance(a, b); };
  return (D(r, t) + D(r, u) + D(s, t) + D(s, u) - T(2) * D(r, s) - T(2) * D(t, u)) / T(2);
}

// Sum of w over unordered pairs {t, u} of blocks other than r, s. Equals
// (m-1)(m-2) * z_criterion.
template <Scalar T>
T neighborliness_sum(const BlockDistanceState<T>& st, std::size_t r, std::size_t s) {
  std::vector<std::size_t> others;
  for (std::size_t t : st.active())
    if (t != r && t != s) others.push_back(t);
  T acc(0);
  for (std::size_t a = 0; a < others.size(); ++a)
    for (std::size_t b = a + 1; b < others.size(); ++b) acc += neighborliness(st, r, s, others[a], others[b]);
  return acc;
}

// State-level wrappers taking slots.
template <Scalar T>
T balanced_length(const BlockDistanceState<T>& st, std::uint64_t cap = default_enumeration_cap) {
  return balanced_length(st.dissimilarity(), st.partial_ordering(), cap);
}

template <Scalar T>
T balanced_length_of_join(const BlockDistanceState<T>& st, std::size_t r, std::size_t s,
                          std::uint64_t cap = default_enumeration_cap) {
  return balanced_length_of_join(st.dissimilarity(), st.partial_ordering(), detail::block_index(st, r),
                                 detail::block_index(st, s), cap);
}

template <Scalar T>
T balanced_length_of_extension(const BlockDistanceState<T>& st, std::size_t r, std::size_t s, Taxon i, Taxon j,
                               std::uint64_t cap = default_enumeration_cap) {
  auto c = extend(st.partial_ordering(), detail::block_index(st, r), detail::block_index(st, s), i, j);
  return balanced_length(st.dissimilarity(), c, cap);
}

// Orderings consistent with a split system: every split is circular.
inline EtaTable split_system_eta(std::size_t n, const std::vector<Split>& splits,
                                 std::uint64_t cap = default_enumeration_cap) {
  detail::check_cap(count_distinct_orderings(static_cast<unsigned>(n)), cap);
  for (const auto& s : splits)
    if (s.n() != n) throw InputError("split taxon count does not match");
  EtaTable eta(n);
  for_each_canonical_ordering(n, [&](const CircularOrdering& pi) {
    for (const auto& s : splits)
      if (!is_circular_split(s, pi)) return;
    eta.add(pi);
  });
  if (eta.orderings == 0) throw InputError("split system is not circular");
  return eta;
}

// Sum over unordered pairs of eta_S(i,j) d(i,j).
template <Scalar T>
T adjacency_weighted_sum(const DissimilarityMap<T>& d, const std::vector<Split>& splits,
                         std::uint64_t cap = default_enumeration_cap) {
  EtaTable eta = split_system_eta(d.size(), splits, cap);
  return length_from_eta(d, eta) * T(static_cast<long long>(2 * eta.orderings));
}

// Balanced length with respect to a split system: the average half tour over
// the consistent orderings.
template <Scalar T>
T split_system_length(const DissimilarityMap<T>& d, const std::vector<Split>& splits,
                      std::uint64_t cap = default_enumeration_cap) {
  return length_from_eta(d, split_system_eta(d.size(), splits, cap));
}

}  // namespace nnet
