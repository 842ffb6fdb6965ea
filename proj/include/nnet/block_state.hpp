#pragma once

// Block-level distances for the agglomeration. Blocks live in slots indexed
// by their smallest taxon; merging keeps the smaller slot, so walking the
// active slots in order visits blocks sorted by minimum taxon.

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nnet/dissimilarity.hpp"
#include "nnet/error.hpp"
#include "nnet/ordering.hpp"
#include "nnet/scalar.hpp"

namespace nnet {

struct WeightingScheme {
  enum class Kind { BalancedTSP, Tree, OriginalBM };

  Kind kind = Kind::BalancedTSP;
  Rational alpha = Rational(1, 2);  // Tree only: share of the block with the smaller min taxon

  static WeightingScheme balanced_tsp() { return {Kind::BalancedTSP, Rational(1, 2)}; }
  static WeightingScheme original_bm() { return {Kind::OriginalBM, Rational(1, 2)}; }
  static WeightingScheme tree(Rational a = Rational(1, 2)) {
    if (a < 0 || a > 1) throw InputError("tree weighting needs 0 <= alpha <= 1");
    return {Kind::Tree, a};
  }
};

inline std::string to_string(const WeightingScheme& w) {
  switch (w.kind) {
    case WeightingScheme::Kind::BalancedTSP: return "balanced-tsp";
    case WeightingScheme::Kind::Tree: return "tree(" + w.alpha.str() + ")";
    case WeightingScheme::Kind::OriginalBM: return "original";
  }
  return "?";
}

template <Scalar T>
T scheme_alpha(const WeightingScheme& w) {
  if constexpr (std::same_as<T, Rational>) return w.alpha;
  else return to_double(w.alpha);
}

template <Scalar T>
class BlockDistanceState {
 public:
  // Every taxon in its own block with weight 1.
  explicit BlockDistanceState(const DissimilarityMap<T>& d)
      : d_(std::make_shared<const DissimilarityMap<T>>(d)) {
    std::size_t n = d.size();
    if (n < 3) throw InputError("need at least 3 taxa");
    init_storage();
    for (Taxon x = 0; x < n; ++x) {
      active_[x] = true;
      paths_[x] = {x};
      mu_[x] = T(1);
      reps_[x] = {unit(x)};
    }
    m_ = n;
    recompute_caches();
  }

  // Arbitrary partial ordering with an explicit weighting. Each block gets
  // a single representative equal to its weighting.
  BlockDistanceState(const DissimilarityMap<T>& d, const PartialCircularOrdering& c, std::vector<T> mu)
      : d_(std::make_shared<const DissimilarityMap<T>>(d)) {
    std::size_t n = d.size();
    if (n < 3) throw InputError("need at least 3 taxa");
    if (c.n() != n || mu.size() != n) throw InputError("partial ordering, weighting and map sizes differ");
    init_storage();
    mu_ = std::move(mu);
    for (const auto& b : c.blocks()) {
      Taxon slot = *std::min_element(b.begin(), b.end());
      active_[slot] = true;
      paths_[slot] = b;
      std::vector<T> rep(n, T(0));
      for (Taxon x : b) rep[x] = mu_[x];
      reps_[slot] = {rep};
    }
    m_ = c.size();
    check_weighting(true);
    recompute_caches();
  }

  std::size_t n() const { return d_->size(); }
  std::size_t m() const { return m_; }
  const DissimilarityMap<T>& dissimilarity() const { return *d_; }

  std::vector<std::size_t> active() const {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < n(); ++r)
      if (active_[r]) out.push_back(r);
    return out;
  }

  bool is_active(std::size_t r) const { return r < n() && active_[r]; }

  const std::vector<Taxon>& path(std::size_t r) const {
    require_active(r);
    return paths_[r];
  }

  std::vector<Taxon> endpoints(std::size_t r) const {
    const auto& p = path(r);
    if (p.size() == 1) return {p.front()};
    return {std::min(p.front(), p.back()), std::max(p.front(), p.back())};
  }

  bool is_endpoint(std::size_t r, Taxon x) const {
    const auto& p = path(r);
    return x == p.front() || x == p.back();
  }

  std::size_t slot_of(Taxon x) const {
    for (std::size_t r = 0; r < n(); ++r)
      if (active_[r] && std::find(paths_[r].begin(), paths_[r].end(), x) != paths_[r].end()) return r;
    throw InputError("taxon out of range");
  }

  const T& mu(Taxon x) const { return mu_.at(x); }
  const std::vector<T>& weights() const { return mu_; }

  // delta(C_r, C_s)
  const T& block_distance(std::size_t r, std::size_t s) const {
    require_fresh();
    require_active(r);
    require_active(s);
    return block_[r * n() + s];
  }

  // delta(x, C_r)
  const T& taxon_block_distance(Taxon x, std::size_t r) const {
    require_fresh();
    require_active(r);
    return taxon_block_[x * n() + r];
  }

  // Sum over t != r of delta(C_r, C_t).
  T row_sum(std::size_t r) const {
    T acc(0);
    for (std::size_t t : active())
      if (t != r) acc += block_distance(r, t);
    return acc;
  }

  PartialCircularOrdering partial_ordering() const {
    std::vector<std::vector<Taxon>> blocks;
    for (std::size_t r : active()) blocks.push_back(paths_[r]);
    return PartialCircularOrdering(n(), std::move(blocks));
  }

  // Joins C_r and C_s by the edge (i, j). The merged path runs through C_r
  // ending at i, then C_s starting at j. Weights and caches stay stale until
  // adjust() is called.
  void merge(std::size_t r, std::size_t s, Taxon i, Taxon j) {
    require_fresh();
    require_active(r);
    require_active(s);
    if (r == s) throw InputError("cannot merge a block with itself");
    if (!is_endpoint(r, i) || !is_endpoint(s, j)) throw InputError("merge taxa must be block endpoints");
    std::vector<Taxon> left = paths_[r], right = paths_[s];
    auto left_reps = reps_[r], right_reps = reps_[s];
    if (left.back() != i) {
      std::reverse(left.begin(), left.end());
      std::reverse(left_reps.begin(), left_reps.end());
    }
    if (right.front() != j) {
      std::reverse(right.begin(), right.end());
      std::reverse(right_reps.begin(), right_reps.end());
    }
    Pending p;
    p.slot = std::min(r, s);
    p.left_is_smaller = r < s;
    p.left = left;
    p.right = right;
    p.reps = left_reps;
    p.reps.insert(p.reps.end(), right_reps.begin(), right_reps.end());
    std::size_t gone = std::max(r, s);
    active_[gone] = false;
    paths_[gone].clear();
    reps_[gone].clear();
    paths_[p.slot] = left;
    paths_[p.slot].insert(paths_[p.slot].end(), right.begin(), right.end());
    --m_;
    pending_ = std::move(p);
  }

  bool pending() const { return pending_.has_value(); }

  // Reweights the block formed by the last merge and refreshes the caches.
  void adjust(const WeightingScheme& scheme) {
    if (!pending_) throw InvariantError("adjust called without a pending merge");
    Pending p = std::move(*pending_);
    pending_.reset();
    std::size_t slot = p.slot;
    const auto& merged = paths_[slot];
    std::size_t n = this->n();
    switch (scheme.kind) {
      case WeightingScheme::Kind::BalancedTSP: {
        for (Taxon x : merged) mu_[x] = T(0);
        mu_[merged.front()] = T(1) / T(2);
        mu_[merged.back()] = T(1) / T(2);
        reps_[slot] = {block_vector(merged)};
        break;
      }
      case WeightingScheme::Kind::Tree: {
        T a = scheme_alpha<T>(scheme);
        T left_share = p.left_is_smaller ? a : T(1 - a);
        T right_share = T(1) - left_share;
        for (Taxon x : p.left) mu_[x] *= left_share;
        for (Taxon x : p.right) mu_[x] *= right_share;
        reps_[slot] = {block_vector(merged)};
        break;
      }
      case WeightingScheme::Kind::OriginalBM: {
        // Representatives along the path; reduce triples starting from the
        // side of the block with the smaller minimum taxon.
        auto& reps = p.reps;
        bool from_front = p.left_is_smaller;
        if (!from_front) std::reverse(reps.begin(), reps.end());
        T half = T(1) / T(2);
        while (reps.size() > 2) {
          std::vector<T> a(n), b(n);
          for (std::size_t x = 0; x < n; ++x) {
            a[x] = half * reps[0][x] + half * reps[1][x];
            b[x] = half * reps[1][x] + half * reps[2][x];
          }
          reps.erase(reps.begin(), reps.begin() + 3);
          reps.insert(reps.begin(), {std::move(a), std::move(b)});
        }
        if (!from_front) std::reverse(reps.begin(), reps.end());
        for (Taxon x : merged) {
          T acc(0);
          for (const auto& rep : reps) acc += rep[x];
          mu_[x] = acc / T(reps.size());
        }
        reps_[slot] = std::move(reps);
        break;
      }
    }
    check_block_weighting(slot, scheme.kind != WeightingScheme::Kind::Tree ||
                                    (scheme.alpha > 0 && scheme.alpha < 1));
    refresh_slot(slot);
  }

  // Rebuilds every cached distance from the original map.
  void recompute_caches() {
    std::size_t n = this->n();
    for (Taxon x = 0; x < n; ++x)
      for (std::size_t r = 0; r < n; ++r) taxon_block_[x * n + r] = active_[r] ? direct_taxon_block(x, r) : T(0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t s = 0; s < n; ++s)
        block_[r * n + s] = (active_[r] && active_[s] && r != s) ? direct_block(r, s) : T(0);
  }

  // Largest deviation between the incremental caches and a recomputation.
  T cache_deviation() const {
    require_fresh();
    T worst(0);
    std::size_t n = this->n();
    for (std::size_t r : active()) {
      for (Taxon x = 0; x < n; ++x) worst = std::max(worst, abs_value(T(taxon_block_[x * n + r] - direct_taxon_block(x, r))));
      for (std::size_t s : active())
        if (s != r) worst = std::max(worst, abs_value(T(block_[r * n + s] - direct_block(r, s))));
    }
    return worst;
  }

  // Eq. (1) evaluated directly.
  T direct_block(std::size_t r, std::size_t s) const {
    T acc(0);
    for (Taxon i : paths_[r])
      for (Taxon j : paths_[s]) acc += mu_[i] * mu_[j] * (*d_)(i, j);
    return acc;
  }

  // Eq. (2) evaluated directly.
  T direct_taxon_block(Taxon x, std::size_t r) const {
    T acc(0);
    for (Taxon i : paths_[r]) acc += mu_[i] * (*d_)(x, i);
    return acc;
  }

 private:
  struct Pending {
    std::size_t slot = 0;
    bool left_is_smaller = true;
    std::vector<Taxon> left, right;
    std::vector<std::vector<T>> reps;
  };

  void init_storage() {
    std::size_t n = this->n();
    active_.assign(n, false);
    paths_.assign(n, {});
    reps_.assign(n, {});
    mu_.assign(n, T(0));
    block_.assign(n * n, T(0));
    taxon_block_.assign(n * n, T(0));
  }

  std::vector<T> unit(Taxon x) const {
    std::vector<T> v(n(), T(0));
    v[x] = T(1);
    return v;
  }

  std::vector<T> block_vector(const std::vector<Taxon>& block) const {
    std::vector<T> v(n(), T(0));
    for (Taxon x : block) v[x] = mu_[x];
    return v;
  }

  void refresh_slot(std::size_t u) {
    std::size_t n = this->n();
    for (Taxon x = 0; x < n; ++x) taxon_block_[x * n + u] = direct_taxon_block(x, u);
    for (std::size_t t = 0; t < n; ++t) {
      if (!active_[t] || t == u) continue;
      T acc(0);
      for (Taxon j : paths_[t]) acc += mu_[j] * taxon_block_[j * n + u];
      block_[u * n + t] = acc;
      block_[t * n + u] = acc;
    }
  }

  void check_weighting(bool endpoints_positive) const {
    for (std::size_t r : active()) check_block_weighting(r, endpoints_positive);
  }

  void check_block_weighting(std::size_t r, bool endpoints_positive) const {
    const auto& p = paths_[r];
    T total(0);
    for (Taxon x : p) {
      if (mu_[x] < T(0)) throw InputError("weighting must be nonnegative");
      total += mu_[x];
    }
    bool ok = scalar_traits<T>::exact ? total == T(1) : abs_value(T(total - T(1))) <= T(1e-9);
    if (!ok) throw InputError("block weights must sum to 1");
    if (endpoints_positive && (!(mu_[p.front()] > T(0)) || !(mu_[p.back()] > T(0)))) {
      throw InputError("block endpoints must have positive weight");
    }
  }

  void require_active(std::size_t r) const {
    if (!is_active(r)) throw InputError("block " + std::to_string(r) + " is not active");
  }

  void require_fresh() const {
    if (pending_) throw InvariantError("block distances are stale until weights are adjusted");
  }

  std::shared_ptr<const DissimilarityMap<T>> d_;
  std::size_t m_ = 0;
  std::vector<bool> active_;
  std::vector<std::vector<Taxon>> paths_;
  std::vector<std::vector<std::vector<T>>> reps_;
  std::vector<T> mu_;
  std::vector<T> block_;
  std::vector<T> taxon_block_;
  std::optional<Pending> pending_;
};

}  // namespace nnet
