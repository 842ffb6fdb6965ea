#pragma once

#include <algorithm>
#include <numeric>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "nnet/error.hpp"
#include "nnet/split.hpp"

namespace nnet {

// Cyclic arrangement of {0..n-1}, canonical under rotation and reflection:
// order[0] == 0 and order[1] < order[n-1].
class CircularOrdering {
 public:
  CircularOrdering() = default;

  explicit CircularOrdering(std::vector<Taxon> order) : order_(std::move(order)) {
    std::size_t n = order_.size();
    if (n < 3) throw InputError("circular orderings need at least 3 taxa");
    std::vector<bool> seen(n, false);
    for (Taxon x : order_) {
      if (x >= n || seen[x]) throw InputError("ordering is not a permutation of 0..n-1");
      seen[x] = true;
    }
    auto zero = std::find(order_.begin(), order_.end(), Taxon{0});
    std::rotate(order_.begin(), zero, order_.end());
    if (order_[1] > order_[n - 1]) std::reverse(order_.begin() + 1, order_.end());
    position_.assign(n, 0);
    for (std::size_t p = 0; p < n; ++p) position_[order_[p]] = p;
  }

  static CircularOrdering identity(std::size_t n) {
    std::vector<Taxon> v(n);
    std::iota(v.begin(), v.end(), Taxon{0});
    return CircularOrdering(std::move(v));
  }

  std::size_t size() const { return order_.size(); }
  const std::vector<Taxon>& order() const { return order_; }
  Taxon operator[](std::size_t p) const { return order_[p % order_.size()]; }
  std::size_t position(Taxon x) const { return position_.at(x); }

  bool adjacent(Taxon a, Taxon b) const {
    std::size_t n = size();
    std::size_t pa = position(a), pb = position(b);
    return (pa + 1) % n == pb || (pb + 1) % n == pa;
  }

  friend bool operator==(const CircularOrdering& a, const CircularOrdering& b) { return a.order_ == b.order_; }
  friend bool operator<(const CircularOrdering& a, const CircularOrdering& b) { return a.order_ < b.order_; }

 private:
  std::vector<Taxon> order_;
  std::vector<std::size_t> position_;
};

inline std::string to_string(const CircularOrdering& pi) {
  std::string out = "(";
  for (std::size_t p = 0; p < pi.size(); ++p) {
    if (p) out += ',';
    out += std::to_string(pi[p]);
  }
  return out + ")";
}

inline std::ostream& operator<<(std::ostream& os, const CircularOrdering& pi) { return os << to_string(pi); }

// One block of each side is a contiguous arc of pi iff membership changes
// exactly twice going once around the cycle.
inline bool is_circular_split(const Split& s, const CircularOrdering& pi) {
  if (s.n() != pi.size()) throw InputError("split and ordering have different taxon counts");
  std::size_t n = pi.size(), changes = 0;
  for (std::size_t p = 0; p < n; ++p) {
    if (s.with_zero(pi[p]) != s.with_zero(pi[p + 1])) ++changes;
  }
  return changes == 2;
}

// The arc occupying positions [a..b] of pi, 1 <= a <= b <= n-1.
inline Split arc_split(const CircularOrdering& pi, std::size_t a, std::size_t b) {
  std::vector<Taxon> arc;
  for (std::size_t p = a; p <= b; ++p) arc.push_back(pi[p]);
  return Split(pi.size(), arc);
}

// All n(n-1)/2 splits circular w.r.t. pi, ordered by arc start then arc end.
// The arc avoiding position 0 identifies each split uniquely.
inline std::vector<Split> all_circular_splits(const CircularOrdering& pi) {
  std::vector<Split> out;
  std::size_t n = pi.size();
  for (std::size_t a = 1; a < n; ++a)
    for (std::size_t b = a; b < n; ++b) out.push_back(arc_split(pi, a, b));
  return out;
}

// Calls f(const CircularOrdering&) on every canonical ordering of n taxa in
// lexicographic order. Stops early if f returns false.
template <class F>
void for_each_canonical_ordering(std::size_t n, F&& f) {
  if (n < 3) throw InputError("circular orderings need at least 3 taxa");
  std::vector<Taxon> v(n);
  std::iota(v.begin(), v.end(), Taxon{0});
  do {
    if (v[1] < v[n - 1]) {
      if constexpr (std::is_same_v<decltype(f(CircularOrdering(v))), bool>) {
        if (!f(CircularOrdering(v))) return;
      } else {
        f(CircularOrdering(v));
      }
    }
  } while (std::next_permutation(v.begin() + 1, v.end()));
}

// Ordered partition of the taxa into directed paths (blocks).
class PartialCircularOrdering {
 public:
  PartialCircularOrdering() = default;

  PartialCircularOrdering(std::size_t n, std::vector<std::vector<Taxon>> blocks) : n_(n), blocks_(std::move(blocks)) {
    std::vector<bool> seen(n, false);
    std::size_t count = 0;
    for (const auto& b : blocks_) {
      if (b.empty()) throw InputError("empty block in partial ordering");
      for (Taxon x : b) {
        if (x >= n || seen[x]) throw InputError("blocks must partition 0..n-1");
        seen[x] = true;
        ++count;
      }
    }
    if (count != n) throw InputError("blocks must partition 0..n-1");
  }

  static PartialCircularOrdering singletons(std::size_t n) {
    std::vector<std::vector<Taxon>> b;
    for (Taxon x = 0; x < n; ++x) b.push_back({x});
    return PartialCircularOrdering(n, std::move(b));
  }

  std::size_t n() const { return n_; }
  std::size_t size() const { return blocks_.size(); }
  const std::vector<std::vector<Taxon>>& blocks() const { return blocks_; }
  const std::vector<Taxon>& block(std::size_t r) const { return blocks_.at(r); }

  // Endpoint set: one taxon for a singleton, else first and last.
  std::vector<Taxon> endpoints(std::size_t r) const {
    const auto& b = blocks_.at(r);
    if (b.size() == 1) return {b.front()};
    return {b.front(), b.back()};
  }

  // Ordering consistent with this partial ordering: every within-block
  // adjacency also holds in pi.
  bool consistent_with(const CircularOrdering& pi) const {
    for (const auto& b : blocks_)
      for (std::size_t k = 1; k < b.size(); ++k)
        if (!pi.adjacent(b[k - 1], b[k])) return false;
    return true;
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::vector<Taxon>> blocks_;
};

}  // namespace nnet
