#pragma once

#include <algorithm>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "nnet/dissimilarity.hpp"
#include "nnet/error.hpp"
#include "nnet/scalar.hpp"

namespace nnet {

// Bipartition of {0..n-1}. Stored as the block containing taxon 0.
class Split {
 public:
  Split() = default;

  // `block` may be either side; it is canonicalized.
  Split(std::size_t n, const std::vector<Taxon>& block) : side_(n) {
    if (n < 3) throw InputError("splits need at least 3 taxa");
    for (Taxon x : block) {
      if (x >= n) throw InputError("taxon " + std::to_string(x) + " out of range");
      side_.set(x);
    }
    if (side_.none() || side_.all()) throw InputError("split blocks must be nonempty");
    if (!side_.test(0)) side_.flip();
  }

  std::size_t n() const { return side_.size(); }

  // True when `x` is on the same side as taxon 0.
  bool with_zero(Taxon x) const { return side_.test(x); }

  bool separates(Taxon i, Taxon j) const { return side_.test(i) != side_.test(j); }

  std::vector<Taxon> zero_side() const { return members(true); }
  std::vector<Taxon> other_side() const { return members(false); }

  std::size_t other_size() const { return n() - side_.count(); }

  bool is_trivial() const {
    std::size_t a = side_.count();
    return a == 1 || a == n() - 1;
  }

  const boost::dynamic_bitset<>& bits() const { return side_; }

  friend bool operator==(const Split& a, const Split& b) { return a.side_ == b.side_; }
  friend bool operator<(const Split& a, const Split& b) {
    if (a.n() != b.n()) return a.n() < b.n();
    return a.side_ < b.side_;
  }

 private:
  std::vector<Taxon> members(bool zero) const {
    std::vector<Taxon> out;
    for (Taxon x = 0; x < n(); ++x)
      if (side_.test(x) == zero) out.push_back(x);
    return out;
  }

  boost::dynamic_bitset<> side_;
};

inline int split_metric(const Split& s, Taxon i, Taxon j) {
  if (i >= s.n() || j >= s.n()) throw InputError("taxon index out of range");
  return s.separates(i, j) ? 1 : 0;
}

inline std::string to_string(const Split& s) {
  std::string out;
  auto put = [&out](const std::vector<Taxon>& side) {
    for (std::size_t k = 0; k < side.size(); ++k) {
      if (k) out += ',';
      out += std::to_string(side[k]);
    }
  };
  put(s.zero_side());
  out += '|';
  put(s.other_side());
  return out;
}

inline std::ostream& operator<<(std::ostream& os, const Split& s) { return os << to_string(s); }

// Weighted split with a possibly negative weight (raw estimates).
template <Scalar T>
struct WeightedSplit {
  Split split;
  T weight;
};

template <Scalar T>
using SplitWeights = std::vector<WeightedSplit<T>>;

// Split system with unique splits and nonnegative weights. Keeps insertion order.
template <Scalar T>
class WeightedSplitSystem {
 public:
  WeightedSplitSystem() = default;
  explicit WeightedSplitSystem(std::size_t n) : n_(n) {}

  void add(const Split& s, const T& weight) {
    if (s.n() != n_) throw InputError("split taxon count does not match system");
    if (weight < T(0)) throw InputError("split weights must be nonnegative");
    if (!index_.emplace(s, entries_.size()).second) throw InputError("duplicate split " + to_string(s));
    entries_.push_back({s, weight});
  }

  std::size_t n() const { return n_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<WeightedSplit<T>>& entries() const { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  bool contains(const Split& s) const { return index_.count(s) > 0; }
  const T& weight(const Split& s) const {
    auto it = index_.find(s);
    if (it == index_.end()) throw InputError("split not in system: " + to_string(s));
    return entries_[it->second].weight;
  }

  std::vector<Split> splits() const {
    std::vector<Split> out;
    for (const auto& e : entries_) out.push_back(e.split);
    return out;
  }

 private:
  std::size_t n_ = 0;
  std::vector<WeightedSplit<T>> entries_;
  std::map<Split, std::size_t> index_;
};

template <Scalar T>
DissimilarityMap<T> metric_from_splits(const WeightedSplitSystem<T>& sys) {
  std::size_t n = sys.n();
  std::vector<T> acc(n * n, T(0));
  for (const auto& [s, w] : sys) {
    if (w == T(0)) continue;
    std::vector<Taxon> a = s.zero_side(), b = s.other_side();
    for (Taxon i : a)
      for (Taxon j : b) {
        acc[i * n + j] += w;
        acc[j * n + i] += w;
      }
  }
  DissimilarityMap<T> d(n);
  for (Taxon i = 0; i < n; ++i)
    for (Taxon j = i + 1; j < n; ++j) d.set(i, j, acc[i * n + j]);
  return d;
}

inline bool are_compatible(const Split& a, const Split& b) {
  // Both store the side containing 0, so A∩A' is never empty.
  const auto& x = a.bits();
  const auto& y = b.bits();
  bool a_notb = (x & ~y).any();   // A ∩ B'
  bool b_nota = (~x & y).any();   // B ∩ A'
  bool neither = (~x & ~y).any(); // B ∩ B'
  return !a_notb || !b_nota || !neither;
}

inline bool is_pairwise_compatible(const std::vector<Split>& splits) {
  for (std::size_t p = 0; p < splits.size(); ++p) {
    for (std::size_t q = p + 1; q < splits.size(); ++q) {
      if (splits[p].n() != splits[q].n()) throw InputError("splits over different taxon sets");
      if (!are_compatible(splits[p], splits[q])) return false;
    }
  }
  return true;
}

inline std::vector<Split> trivial_splits(std::size_t n) {
  std::vector<Split> out;
  for (Taxon x = 0; x < n; ++x) out.emplace_back(n, std::vector<Taxon>{x});
  return out;
}

}  // namespace nnet
