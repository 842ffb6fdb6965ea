#pragma once

// Split-weight estimation over circular split bases: the closed formula,
// clamping, non-negative least squares, and exact weighted least squares.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "nnet/dissimilarity.hpp"
#include "nnet/error.hpp"
#include "nnet/length.hpp"
#include "nnet/ordering.hpp"
#include "nnet/split.hpp"

namespace nnet {

// Weight of the arc at positions [a..b] read off four distances:
// (d(x_{a-1},x_b) + d(x_a,x_{b+1}) - d(x_{a-1},x_{b+1}) - d(x_a,x_b)) / 2.
template <Scalar T>
SplitWeights<T> lambda_formula(const DissimilarityMap<T>& d, const CircularOrdering& pi) {
  std::size_t n = d.size();
  if (n < 4) throw InputError("split weight formula needs n >= 4");
  if (pi.size() != n) throw InputError("ordering and map sizes differ");
  SplitWeights<T> out;
  for (std::size_t a = 1; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      Taxon before = pi[a - 1], first = pi[a], last = pi[b], after = pi[b + 1];
      T v = (d(before, last) + d(first, after) - d(before, after) - d(first, last)) / T(2);
      out.push_back({arc_split(pi, a, b), v});
    }
  }
  return out;
}

template <Scalar T>
SplitWeights<T> clamp_nonnegative(SplitWeights<T> w) {
  for (auto& e : w) e.weight = std::max(e.weight, T(0));
  return w;
}

template <Scalar T>
WeightedSplitSystem<T> to_system(std::size_t n, const SplitWeights<T>& w) {
  WeightedSplitSystem<T> out(n);
  for (const auto& e : w) out.add(e.split, e.weight);
  return out;
}

// Rows: taxon pairs (i<j) in lexicographic order. Columns: splits.
struct DesignMatrix {
  std::size_t n = 0;
  std::vector<std::pair<Taxon, Taxon>> pairs;
  std::vector<Split> splits;
  Eigen::MatrixXd a;

  DesignMatrix(std::size_t n_, std::vector<Split> splits_) : n(n_), splits(std::move(splits_)) {
    for (Taxon i = 0; i < n; ++i)
      for (Taxon j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(splits.size()));
    for (std::size_t c = 0; c < splits.size(); ++c) {
      if (splits[c].n() != n) throw InputError("split taxon count does not match");
      for (std::size_t r = 0; r < pairs.size(); ++r)
        a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            split_metric(splits[c], pairs[r].first, pairs[r].second);
    }
  }

  static DesignMatrix circular(const CircularOrdering& pi) { return DesignMatrix(pi.size(), all_circular_splits(pi)); }
};

// Per-pair weights as an n x n symmetric matrix; empty means uniform.
using PairWeights = std::vector<std::vector<double>>;

struct NnlsResult {
  WeightedSplitSystem<double> system;  // every basis split, weight >= 0
  double residual = 0;                 // sqrt of the weighted sum of squared errors
  std::size_t iterations = 0;
  bool kkt = false;                    // stationarity verified at the returned point
};

struct NnlsOptions {
  double tol = 1e-10;                // relative to the scale of A^T b
  std::size_t iteration_factor = 10; // cap = factor * number of splits
};

template <Scalar T>
double weighted_residual(const DissimilarityMap<T>& d, const SplitWeights<T>& w, const PairWeights& pw = {}) {
  std::size_t n = d.size();
  std::vector<double> acc(n * n, 0.0);
  for (const auto& e : w) {
    double v = to_double(e.weight);
    for (Taxon i : e.split.zero_side())
      for (Taxon j : e.split.other_side()) acc[std::min(i, j) * n + std::max(i, j)] += v;
  }
  double total = 0;
  for (Taxon i = 0; i < n; ++i)
    for (Taxon j = i + 1; j < n; ++j) {
      double r = to_double(d(i, j)) - acc[i * n + j];
      total += (pw.empty() ? 1.0 : pw[i][j]) * r * r;
    }
  return std::sqrt(total);
}

// Lawson-Hanson active set over an arbitrary split basis.
template <Scalar T>
NnlsResult nnls_fit(const DissimilarityMap<T>& d, const std::vector<Split>& basis, const PairWeights& pw = {},
                    const NnlsOptions& opt = {}) {
  std::size_t n = d.size();
  if (n < 4) throw InputError("nnls_fit needs n >= 4");
  if (!pw.empty()) {
    if (pw.size() != n) throw InputError("pair weights must be n x n");
    for (Taxon i = 0; i < n; ++i)
      for (Taxon j = i + 1; j < n; ++j)
        if (pw[i].size() != n || !(pw[i][j] >= 0)) throw InputError("pair weights must be nonnegative");
  }
  DesignMatrix dm(n, basis);
  Eigen::Index rows = dm.a.rows(), k = dm.a.cols();
  Eigen::MatrixXd A = dm.a;
  Eigen::VectorXd b(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    auto [i, j] = dm.pairs[static_cast<std::size_t>(r)];
    double sw = pw.empty() ? 1.0 : std::sqrt(pw[i][j]);
    b(r) = sw * to_double(d(i, j));
    A.row(r) *= sw;
  }
  double scale = std::max(1.0, (A.transpose() * b).cwiseAbs().maxCoeff());
  double tol = opt.tol * scale;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(k);
  std::vector<bool> passive(static_cast<std::size_t>(k), false);
  auto solve_passive = [&]() {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index c = 0; c < k; ++c)
      if (passive[static_cast<std::size_t>(c)]) idx.push_back(c);
    Eigen::MatrixXd sub(rows, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = A.col(idx[c]);
    Eigen::VectorXd zs = sub.colPivHouseholderQr().solve(b);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(k);
    for (std::size_t c = 0; c < idx.size(); ++c) z(idx[c]) = zs(static_cast<Eigen::Index>(c));
    return z;
  };

  std::size_t cap = opt.iteration_factor * static_cast<std::size_t>(std::max<Eigen::Index>(k, 1));
  std::size_t iter = 0;
  Eigen::VectorXd w = A.transpose() * (b - A * x);
  while (true) {
    Eigen::Index best = -1;
    for (Eigen::Index c = 0; c < k; ++c)
      if (!passive[static_cast<std::size_t>(c)] && w(c) > tol && (best < 0 || w(c) > w(best))) best = c;
    if (best < 0) break;
    if (++iter > cap) throw InvariantError("nnls did not converge within the iteration cap");
    passive[static_cast<std::size_t>(best)] = true;
    while (true) {
      Eigen::VectorXd z = solve_passive();
      bool feasible = true;
      for (Eigen::Index c = 0; c < k; ++c)
        if (passive[static_cast<std::size_t>(c)] && z(c) <= 0) feasible = false;
      if (feasible) {
        x = z;
        break;
      }
      double step = 1.0;
      for (Eigen::Index c = 0; c < k; ++c) {
        if (passive[static_cast<std::size_t>(c)] && z(c) <= 0) step = std::min(step, x(c) / (x(c) - z(c)));
      }
      x += step * (z - x);
      for (Eigen::Index c = 0; c < k; ++c) {
        if (passive[static_cast<std::size_t>(c)] && x(c) <= 1e-15 * scale) {
          passive[static_cast<std::size_t>(c)] = false;
          x(c) = 0;
        }
      }
      if (++iter > cap) throw InvariantError("nnls did not converge within the iteration cap");
    }
    w = A.transpose() * (b - A * x);
  }

  NnlsResult out;
  out.system = WeightedSplitSystem<double>(n);
  for (Eigen::Index c = 0; c < k; ++c) out.system.add(dm.splits[static_cast<std::size_t>(c)], std::max(0.0, x(c)));
  out.residual = (A * x - b).norm();
  out.iterations = iter;
  // Gradient of the half squared error is -w.
  out.kkt = true;
  for (Eigen::Index c = 0; c < k; ++c) {
    double g = -w(c);
    if (x(c) > 0 ? std::abs(g) > tol : g < -tol) out.kkt = false;
  }
  return out;
}

template <Scalar T>
NnlsResult nnls_fit(const DissimilarityMap<T>& d, const CircularOrdering& pi, const PairWeights& pw = {},
                    const NnlsOptions& opt = {}) {
  return nnls_fit(d, all_circular_splits(pi), pw, opt);
}

// Solves the normal equations A^T W A x = A^T W d by Gaussian elimination.
// Free variables of a rank-deficient system are set to 0. Exact for Rational.
template <Scalar T>
std::vector<T> weighted_least_squares(const DissimilarityMap<T>& d, const std::vector<Split>& basis,
                                      const std::vector<std::vector<T>>& weights) {
  std::size_t n = d.size(), k = basis.size();
  std::vector<std::vector<T>> M(k, std::vector<T>(k + 1, T(0)));
  for (Taxon i = 0; i < n; ++i) {
    for (Taxon j = i + 1; j < n; ++j) {
      const T& w = weights.at(i).at(j);
      if (w == T(0)) continue;
      std::vector<std::size_t> cols;
      for (std::size_t c = 0; c < k; ++c)
        if (basis[c].separates(i, j)) cols.push_back(c);
      for (std::size_t p : cols) {
        for (std::size_t q : cols) M[p][q] += w;
        M[p][k] += w * d(i, j);
      }
    }
  }
  T scale(0);
  for (const auto& row : M)
    for (std::size_t c = 0; c < k; ++c) scale = std::max(scale, abs_value(row[c]));
  T eps = scalar_traits<T>::exact ? T(0) : T(1e-12) * scale;
  std::vector<std::size_t> pivot_col;
  std::size_t row = 0;
  for (std::size_t c = 0; c < k && row < k; ++c) {
    std::size_t best = row;
    for (std::size_t r = row + 1; r < k; ++r)
      if (abs_value(M[r][c]) > abs_value(M[best][c])) best = r;
    if (!(abs_value(M[best][c]) > eps)) continue;
    std::swap(M[row], M[best]);
    for (std::size_t r = 0; r < k; ++r) {
      if (r == row || M[r][c] == T(0)) continue;
      T f = M[r][c] / M[row][c];
      for (std::size_t q = c; q <= k; ++q) M[r][q] -= f * M[row][q];
    }
    pivot_col.push_back(c);
    ++row;
  }
  std::vector<T> x(k, T(0));
  for (std::size_t r = 0; r < pivot_col.size(); ++r) x[pivot_col[r]] = M[r][k] / M[r][pivot_col[r]];
  return x;
}

template <Scalar T>
struct WlsIdentity {
  T lhs{};  // split-system length of d
  T rhs{};  // sum of fitted split weights
  std::vector<T> lambda;
};

// Fits weights with per-pair weights eta_S(i,j) over the splits S and
// returns both sides of l(d,S) = sum lambda_S. S must include every trivial
// split.
template <Scalar T>
WlsIdentity<T> wls_length_identity_check(const DissimilarityMap<T>& d, const std::vector<Split>& splits,
                                         std::uint64_t cap = default_enumeration_cap) {
  std::size_t n = d.size();
  std::set<Split> have(splits.begin(), splits.end());
  if (have.size() != splits.size()) throw InputError("duplicate split");
  for (const auto& t : trivial_splits(n))
    if (!have.count(t)) throw InputError("split system must contain every trivial split");
  EtaTable eta = split_system_eta(n, splits, cap);
  std::vector<std::vector<T>> w(n, std::vector<T>(n, T(0)));
  for (Taxon i = 0; i < n; ++i)
    for (Taxon j = 0; j < n; ++j)
      if (i != j) w[i][j] = T(static_cast<long long>(eta(i, j)));
  WlsIdentity<T> out;
  out.lambda = weighted_least_squares(d, splits, w);
  out.lhs = length_from_eta(d, eta);
  out.rhs = T(0);
  for (const auto& v : out.lambda) out.rhs += v;
  return out;
}

}  // namespace nnet
