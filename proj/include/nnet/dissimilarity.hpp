#pragma once

#include <string>
#include <vector>

#include "nnet/error.hpp"
#include "nnet/scalar.hpp"

namespace nnet {

// Symmetric, nonnegative, zero-diagonal matrix over taxa 0..n-1.
template <Scalar T>
class DissimilarityMap {
 public:
  DissimilarityMap() = default;
  explicit DissimilarityMap(std::size_t n) : n_(n), d_(n * n, T(0)) {}

  // Validates every invariant; the input must already be symmetric.
  static DissimilarityMap from_rows(const std::vector<std::vector<T>>& rows) {
    DissimilarityMap out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) throw InputError("square matrix required");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i][i] != T(0)) throw InputError("nonzero diagonal at taxon " + std::to_string(i));
      for (std::size_t j = i + 1; j < rows.size(); ++j) {
        if (rows[i][j] != rows[j][i]) {
          throw InputError("asymmetric entries at (" + std::to_string(i) + "," + std::to_string(j) + ")");
        }
        out.set(i, j, rows[i][j]);
      }
    }
    return out;
  }

  std::size_t size() const { return n_; }

  const T& operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }

  const T& at(std::size_t i, std::size_t j) const {
    check(i);
    check(j);
    return (*this)(i, j);
  }

  void set(std::size_t i, std::size_t j, const T& value) {
    check(i);
    check(j);
    if (value < T(0)) throw InputError("negative dissimilarity");
    if (i == j) {
      if (value != T(0)) throw InputError("diagonal must be zero");
      return;
    }
    d_[i * n_ + j] = value;
    d_[j * n_ + i] = value;
  }

  friend bool operator==(const DissimilarityMap&, const DissimilarityMap&) = default;

 private:
  void check(std::size_t i) const {
    if (i >= n_) throw InputError("taxon index " + std::to_string(i) + " out of range");
  }

  std::size_t n_ = 0;
  std::vector<T> d_;
};

template <Scalar T>
DissimilarityMap<double> to_double_map(const DissimilarityMap<T>& d) {
  DissimilarityMap<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = i + 1; j < d.size(); ++j) out.set(i, j, to_double(d(i, j)));
  return out;
}

}  // namespace nnet
