#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nnet/block_state.hpp"
#include "nnet/dissimilarity.hpp"
#include "nnet/error.hpp"
#include "nnet/ordering.hpp"
#include "nnet/split.hpp"

namespace nnet {

// How the joining edge between the two selected blocks is chosen.
//  BalancedLength: the endpoint pair giving the shortest balanced length of
//    the extended partial ordering.
//  AsTypeset: the literal endpoint criterion, with raw within-block sums.
enum class EndpointRule { BalancedLength, AsTypeset };

template <Scalar T>
T q_criterion(const BlockDistanceState<T>& st, std::size_t r, std::size_t s) {
  if (r == s) throw InputError("q_criterion needs two distinct blocks");
  T m(static_cast<long>(st.m()));
  return (m - T(2)) * st.block_distance(r, s) - st.row_sum(r) - st.row_sum(s);
}

template <Scalar T>
T q_hat_criterion(const BlockDistanceState<T>& st, std::size_t r, std::size_t s, Taxon i, Taxon j,
                  EndpointRule rule = EndpointRule::BalancedLength) {
  if (r == s) throw InputError("q_hat_criterion needs two distinct blocks");
  if (!st.is_endpoint(r, i) || !st.is_endpoint(s, j)) throw InputError("q_hat_criterion needs block endpoints");
  const auto& d = st.dissimilarity();
  std::size_t m = st.m();
  T outside(0);
  for (std::size_t t : st.active()) {
    if (t == r || t == s) continue;
    outside += st.taxon_block_distance(i, t) + st.taxon_block_distance(j, t);
  }
  if (rule == EndpointRule::BalancedLength) {
    if (m == 2) {
      // Closing the cycle: the far ends are joined as well.
      const auto& pr = st.path(r);
      const auto& ps = st.path(s);
      Taxon i2 = pr.front() == i ? pr.back() : pr.front();
      Taxon j2 = ps.front() == j ? ps.back() : ps.front();
      return d(i, j) + d(i2, j2);
    }
    return T(static_cast<long>(m) - 2) * d(i, j) - outside;
  }
  long coef = static_cast<long>(m) - 4 + static_cast<long>(st.endpoints(r).size() + st.endpoints(s).size());
  T within(0);
  for (std::size_t b : {r, s}) {
    for (Taxon k : st.path(b)) {
      if (k != i) within += d(i, k);
      if (k != j) within += d(j, k);
    }
  }
  return T(coef) * d(i, j) - outside - within;
}

template <Scalar T>
struct AgglomerationStep {
  std::size_t m = 0;          // blocks before the merge
  std::size_t r = 0, s = 0;   // slots (smallest taxon of each block), r < s
  T q{};
  Taxon i = 0, j = 0;         // joining edge, i in C_r and j in C_s
  T q_hat{};
  std::size_t candidates = 0; // endpoint pairs compared
  std::size_t tied_pairs = 1; // block pairs sharing the minimal Q
  std::vector<Taxon> block_r, block_s;
  std::vector<Taxon> merged;  // path of the merged block
  std::optional<Split> split; // absent for the final merge
  std::vector<T> mu;          // weighting after adjustment
};

template <Scalar T>
using AgglomerationTrace = std::vector<AgglomerationStep<T>>;

template <Scalar T>
struct NeighborNetResult {
  CircularOrdering ordering;
  std::vector<Split> tree_splits;  // distinct nontrivial splits, sorted
  AgglomerationTrace<T> trace;
};

template <Scalar T>
struct NeighborNetOptions {
  EndpointRule endpoint_rule = EndpointRule::BalancedLength;
  // Compare incremental block distances with a full recomputation after
  // every merge; throws InvariantError on mismatch.
  bool verify_caches = false;
  // Called with the state before each merge and the selection about to be
  // applied (split and mu not yet filled).
  std::function<void(const BlockDistanceState<T>&, const AgglomerationStep<T>&)> on_step;
};

struct PairChoice {
  std::size_t r = 0, s = 0;
};

// argmin of Q over block pairs, first in (r, s) order among ties.
template <Scalar T>
std::pair<PairChoice, T> select_blocks(const BlockDistanceState<T>& st) {
  auto act = st.active();
  if (act.size() < 2) throw InputError("need at least two blocks");
  std::vector<T> rows(st.n(), T(0));
  for (std::size_t r : act) rows[r] = st.row_sum(r);
  T m(static_cast<long>(st.m()));
  std::optional<T> best;
  PairChoice choice;
  for (std::size_t a = 0; a < act.size(); ++a) {
    for (std::size_t b = a + 1; b < act.size(); ++b) {
      std::size_t r = act[a], s = act[b];
      T q = (m - T(2)) * st.block_distance(r, s) - rows[r] - rows[s];
      if (!best || definitely_less(q, *best)) {
        best = q;
        choice = {r, s};
      }
    }
  }
  return {choice, *best};
}

struct EndpointChoice {
  Taxon i = 0, j = 0;
  std::size_t candidates = 0;
};

template <Scalar T>
std::pair<EndpointChoice, T> select_endpoints(const BlockDistanceState<T>& st, std::size_t r, std::size_t s,
                                              EndpointRule rule) {
  std::optional<T> best;
  EndpointChoice choice;
  for (Taxon i : st.endpoints(r)) {
    for (Taxon j : st.endpoints(s)) {
      T v = q_hat_criterion(st, r, s, i, j, rule);
      ++choice.candidates;
      if (!best || definitely_less(v, *best)) {
        best = v;
        choice.i = i;
        choice.j = j;
      }
    }
  }
  return {choice, *best};
}

// Balanced length of the partial ordering obtained by joining C_r and C_s at
// (i, j), less half the current within-block length, with the joined block
// weighted 1/2 at each far end: d(i,j)/2 + A'/(m-2), A' being the sum of
// block distances among the m-1 resulting blocks. Exact under balanced TSP
// weights; used to separate pairs with equal Q.
template <Scalar T>
T extension_score(const BlockDistanceState<T>& st, std::size_t r, std::size_t s, Taxon i, Taxon j) {
  const auto& d = st.dissimilarity();
  std::size_t m = st.m();
  if (m < 3) return d(i, j);
  const auto& pr = st.path(r);
  const auto& ps = st.path(s);
  Taxon i2 = pr.front() == i ? pr.back() : pr.front();
  Taxon j2 = ps.front() == j ? ps.back() : ps.front();
  std::vector<std::size_t> others;
  for (std::size_t t : st.active())
    if (t != r && t != s) others.push_back(t);
  T across(0);
  for (std::size_t a = 0; a < others.size(); ++a) {
    for (std::size_t b = a + 1; b < others.size(); ++b) across += st.block_distance(others[a], others[b]);
    across += (st.taxon_block_distance(i2, others[a]) + st.taxon_block_distance(j2, others[a])) / T(2);
  }
  return d(i, j) / T(2) + across / T(static_cast<long>(m - 2));
}

struct MergeChoice {
  PairChoice pair;
  EndpointChoice ends;
  std::size_t tied_pairs = 1;  // pairs sharing the minimal Q
};

// Q argmin, then the endpoint rule. Some ties are structural (with four
// blocks complementary pairs always share Q; with three every pair does), so
// pairs tied on Q are separated by extension_score of their chosen edge
// before falling back to (r, s) order. This keeps the output independent of
// taxon labels.
template <Scalar T>
MergeChoice select_merge(const BlockDistanceState<T>& st, EndpointRule rule) {
  auto act = st.active();
  if (act.size() < 2) throw InputError("need at least two blocks");
  std::vector<T> rows(st.n(), T(0));
  for (std::size_t r : act) rows[r] = st.row_sum(r);
  T m(static_cast<long>(st.m()));
  std::vector<std::pair<PairChoice, T>> qs;
  std::optional<T> best;
  for (std::size_t a = 0; a < act.size(); ++a) {
    for (std::size_t b = a + 1; b < act.size(); ++b) {
      std::size_t r = act[a], s = act[b];
      T q = (m - T(2)) * st.block_distance(r, s) - rows[r] - rows[s];
      if (!best || definitely_less(q, *best)) best = q;
      qs.push_back({{r, s}, q});
    }
  }
  MergeChoice out;
  out.tied_pairs = 0;
  std::optional<T> best_score;
  for (const auto& [pair, q] : qs) {
    if (definitely_less(*best, q)) continue;
    ++out.tied_pairs;
    EndpointChoice ends = select_endpoints(st, pair.r, pair.s, rule).first;
    if (out.tied_pairs == 1 && qs.size() == 1) return {pair, ends, 1};
    T score = extension_score(st, pair.r, pair.s, ends.i, ends.j);
    if (!best_score || definitely_less(score, *best_score)) {
      best_score = score;
      out.pair = pair;
      out.ends = ends;
    }
  }
  return out;
}

// Merge without reweighting; call adjust_weights next.
template <Scalar T>
BlockDistanceState<T> merge_blocks(const BlockDistanceState<T>& st, std::size_t r, std::size_t s, Taxon i, Taxon j) {
  BlockDistanceState<T> out = st;
  out.merge(r, s, i, j);
  return out;
}

template <Scalar T>
std::vector<T> adjust_weights(BlockDistanceState<T>& st, const WeightingScheme& scheme) {
  st.adjust(scheme);
  return st.weights();
}

template <Scalar T>
NeighborNetResult<T> run_neighbor_net(const DissimilarityMap<T>& d, const WeightingScheme& scheme,
                                      const NeighborNetOptions<T>& opts = {}) {
  std::size_t n = d.size();
  if (n < 3) throw InputError("neighbor-net needs at least 3 taxa");
  BlockDistanceState<T> st(d);
  NeighborNetResult<T> out;
  std::set<Split> tree;
  while (st.m() > 1) {
    AgglomerationStep<T> step;
    step.m = st.m();
    auto [pair, ends, tied] = select_merge(st, opts.endpoint_rule);
    step.tied_pairs = tied;
    step.r = pair.r;
    step.s = pair.s;
    step.q = q_criterion(st, pair.r, pair.s);
    T qh = q_hat_criterion(st, pair.r, pair.s, ends.i, ends.j, opts.endpoint_rule);
    step.i = ends.i;
    step.j = ends.j;
    step.q_hat = qh;
    step.candidates = ends.candidates;
    step.block_r = st.path(pair.r);
    step.block_s = st.path(pair.s);
    if (opts.on_step) opts.on_step(st, step);

    st.merge(pair.r, pair.s, ends.i, ends.j);
    st.adjust(scheme);
    if (opts.verify_caches) {
      T dev = st.cache_deviation();
      bool ok = scalar_traits<T>::exact ? dev == T(0) : to_double(dev) <= 1e-9 * (1.0 + to_double(d(0, 1)));
      if (!ok) throw InvariantError("incremental block distances diverged from recomputation");
    }
    step.merged = st.path(pair.r);
    if (step.merged.size() < n) {
      Split sp(n, step.merged);
      step.split = sp;
      if (!sp.is_trivial()) tree.insert(sp);
    }
    step.mu = st.weights();
    out.trace.push_back(std::move(step));
  }
  const auto& final_path = st.path(0);
  out.ordering = CircularOrdering(final_path);
  out.tree_splits.assign(tree.begin(), tree.end());
  for (const auto& sp : out.tree_splits) {
    if (!is_circular_split(sp, out.ordering)) throw InvariantError("tree split not circular w.r.t. the output ordering");
  }
  if (out.trace.size() != n - 1) throw InvariantError("agglomeration did not take n-1 steps");
  return out;
}

// Classic neighbor-joining on a shrinking matrix. Clusters carry the label of
// their smallest taxon; alpha weights the cluster with the smaller label.
template <Scalar T>
struct NeighborJoiningTree {
  std::vector<Split> splits;  // distinct nontrivial, sorted
  // Merge history: each join creates a node whose children are existing
  // nodes. Leaves are 0..n-1; joins are numbered n, n+1, ...
  std::vector<std::pair<std::size_t, std::size_t>> joins;
  std::vector<std::size_t> final_three;
};

template <Scalar T>
NeighborJoiningTree<T> neighbor_joining_tree(const DissimilarityMap<T>& d, const Rational& alpha_rule = Rational(1, 2)) {
  std::size_t n = d.size();
  if (n < 3) throw InputError("neighbor-joining needs at least 3 taxa");
  if (alpha_rule < 0 || alpha_rule > 1) throw InputError("alpha must lie in [0,1]");
  T alpha;
  if constexpr (std::same_as<T, Rational>) alpha = alpha_rule;
  else alpha = to_double(alpha_rule);

  struct Cluster {
    Taxon label;
    std::size_t node;
    std::vector<Taxon> members;
  };
  std::vector<Cluster> cl;
  for (Taxon x = 0; x < n; ++x) cl.push_back({x, x, {x}});
  std::vector<std::vector<T>> D(n, std::vector<T>(n));
  for (Taxon a = 0; a < n; ++a)
    for (Taxon b = 0; b < n; ++b) D[a][b] = d(a, b);

  NeighborJoiningTree<T> out;
  std::set<Split> splits;
  std::size_t next_node = n;
  while (cl.size() > 3) {
    std::size_t m = cl.size();
    std::vector<T> R(m, T(0));
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b)
        if (a != b) R[a] += D[a][b];
    std::optional<T> best;
    std::size_t bi = 0, bj = 0;
    // Clusters stay sorted by label, so (a, b) order matches slot order.
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a + 1; b < m; ++b) {
        T q = T(static_cast<long>(m) - 2) * D[a][b] - R[a] - R[b];
        if (!best || definitely_less(q, *best)) {
          best = q;
          bi = a;
          bj = b;
        }
      }
    }
    T mm2 = T(static_cast<long>(m) - 2);
    T bl_i = D[bi][bj] / T(2) + (R[bi] - R[bj]) / (T(2) * mm2);
    T bl_j = D[bi][bj] - bl_i;
    std::vector<T> row(m);
    for (std::size_t k = 0; k < m; ++k) {
      if (k == bi || k == bj) continue;
      row[k] = alpha * (D[bi][k] - bl_i) + (T(1) - alpha) * (D[bj][k] - bl_j);
    }
    Cluster merged{cl[bi].label, next_node++, cl[bi].members};
    merged.members.insert(merged.members.end(), cl[bj].members.begin(), cl[bj].members.end());
    out.joins.emplace_back(cl[bi].node, cl[bj].node);
    splits.insert(Split(n, merged.members));
    // bi < bj and bi keeps the smaller label: overwrite bi, erase bj.
    for (std::size_t k = 0; k < m; ++k) {
      if (k == bi || k == bj) continue;
      D[bi][k] = row[k];
      D[k][bi] = row[k];
    }
    D[bi][bi] = T(0);
    cl[bi] = std::move(merged);
    cl.erase(cl.begin() + static_cast<std::ptrdiff_t>(bj));
    D.erase(D.begin() + static_cast<std::ptrdiff_t>(bj));
    for (auto& r : D) r.erase(r.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  for (const auto& c : cl) out.final_three.push_back(c.node);
  for (const auto& s : splits)
    if (!s.is_trivial()) out.splits.push_back(s);
  return out;
}

template <Scalar T>
std::vector<Split> neighbor_joining(const DissimilarityMap<T>& d, const Rational& alpha_rule = Rational(1, 2)) {
  return neighbor_joining_tree(d, alpha_rule).splits;
}

}  // namespace nnet
