#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace nnet;

namespace {

template <class T>
T weight_of(const SplitWeights<T>& w, const Split& s) {
  for (const auto& e : w)
    if (e.split == s) return e.weight;
  ADD_FAILURE() << "missing split " << s;
  return T(0);
}

// Pairwise sums of signed split weights, by double loop.
template <class T>
std::vector<std::vector<T>> signed_metric(std::size_t n, const SplitWeights<T>& w) {
  std::vector<std::vector<T>> acc(n, std::vector<T>(n, T(0)));
  for (const auto& e : w)
    for (Taxon i = 0; i < n; ++i)
      for (Taxon j = 0; j < n; ++j)
        if (e.split.separates(i, j)) acc[i][j] += e.weight;
  return acc;
}

std::vector<std::vector<double>> perturbation(oracle::Rng& rng, std::size_t n, double bound) {
  std::vector<std::vector<double>> e(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) e[i][j] = e[j][i] = oracle::uniform<double>(rng, -bound, bound);
  return e;
}

DissimilarityMap<double> perturbed(const DissimilarityMap<double>& d, const std::vector<std::vector<double>>& e) {
  DissimilarityMap<double> out(d.size());
  for (Taxon i = 0; i < d.size(); ++i)
    for (Taxon j = i + 1; j < d.size(); ++j) out.set(i, j, std::max(0.0, d(i, j) + e[i][j]));
  return out;
}

// Best nonnegative fit by trying every support and solving unconstrained
// least squares on it. Only for small bases.
double brute_nnls_residual(const DissimilarityMap<double>& d, const std::vector<Split>& basis) {
  std::size_t n = d.size(), k = basis.size();
  std::vector<std::pair<Taxon, Taxon>> pairs;
  for (Taxon i = 0; i < n; ++i)
    for (Taxon j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  Eigen::VectorXd b(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t r = 0; r < pairs.size(); ++r) b(static_cast<Eigen::Index>(r)) = d(pairs[r].first, pairs[r].second);
  double best = b.norm();
  for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < k; ++c)
      if (mask >> c & 1) cols.push_back(c);
    Eigen::MatrixXd A(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < pairs.size(); ++r)
      for (std::size_t c = 0; c < cols.size(); ++c)
        A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            basis[cols[c]].separates(pairs[r].first, pairs[r].second) ? 1.0 : 0.0;
    Eigen::VectorXd x = A.fullPivHouseholderQr().solve(b);
    if (x.minCoeff() < -1e-12) continue;
    best = std::min(best, (A * x - b).norm());
  }
  return best;
}

}  // namespace

TEST(LambdaFormula, RecoversExactly) {
  oracle::Rng rng(50);
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t n = 4 + trial % 6;
    auto inst = oracle::random_circular<Rational>(rng, n);
    auto w = lambda_formula(inst.d, CircularOrdering(inst.cycle));
    EXPECT_EQ(w.size(), n * (n - 1) / 2);
    for (const auto& [arc, lambda] : inst.arcs) EXPECT_EQ(weight_of(w, Split(n, arc)), lambda);
  }
}

TEST(LambdaFormula, FloatWithinTolerance) {
  oracle::Rng rng(51);
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t n = 5 + trial % 6;
    auto inst = oracle::random_circular<double>(rng, n);
    auto w = lambda_formula(inst.d, CircularOrdering(inst.cycle));
    for (const auto& [arc, lambda] : inst.arcs) EXPECT_NEAR(weight_of(w, Split(n, arc)), lambda, 1e-9);
  }
}

TEST(LambdaFormula, SignedWeightsReproduceAnyMap) {
  // The circular splits of one ordering are a basis; the formula inverts it.
  oracle::Rng rng(52);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t n = 4 + trial % 5;
    auto d = oracle::random_map<Rational>(rng, n);
    CircularOrdering pi(oracle::random_permutation(rng, n));
    auto acc = signed_metric(n, lambda_formula(d, pi));
    for (Taxon i = 0; i < n; ++i)
      for (Taxon j = 0; j < n; ++j) EXPECT_EQ(acc[i][j], d(i, j));
  }
}

TEST(LambdaFormula, Preconditions) {
  EXPECT_THROW(lambda_formula(DissimilarityMap<double>(3), CircularOrdering::identity(3)), InputError);
  EXPECT_THROW(lambda_formula(DissimilarityMap<double>(5), CircularOrdering::identity(4)), InputError);
}

TEST(Clamp, ZeroesNegatives) {
  SplitWeights<double> w{{Split(4, {0, 1}), -0.5}, {Split(4, {0}), 2.0}};
  auto c = clamp_nonnegative(w);
  EXPECT_EQ(c[0].weight, 0.0);
  EXPECT_EQ(c[1].weight, 2.0);
  EXPECT_NO_THROW(to_system(4, c));
  EXPECT_THROW(to_system(4, w), InputError);
}

TEST(DesignMatrix, CircularBasisHasFullRank) {
  for (std::size_t n = 4; n <= 9; ++n) {
    auto dm = DesignMatrix::circular(CircularOrdering::identity(n));
    EXPECT_EQ(dm.a.rows(), static_cast<Eigen::Index>(n * (n - 1) / 2));
    EXPECT_EQ(dm.a.cols(), dm.a.rows());
    EXPECT_EQ(dm.a.fullPivLu().rank(), dm.a.rows());
  }
}

TEST(Nnls, ExactOnUnperturbedInputs) {
  oracle::Rng rng(53);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t n = 4 + trial % 7;
    auto inst = oracle::random_circular<double>(rng, n);
    auto res = nnls_fit(inst.d, CircularOrdering(inst.cycle));
    EXPECT_LE(res.residual, 1e-10);
    EXPECT_TRUE(res.kkt);
    for (const auto& [arc, lambda] : inst.arcs) EXPECT_NEAR(res.system.weight(Split(n, arc)), lambda, 1e-9);
  }
}

TEST(Nnls, NeverWorseThanClampedFormula) {
  oracle::Rng rng(54);
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t n = 5 + trial % 5;
    auto inst = oracle::random_circular<double>(rng, n);
    auto d = perturbed(inst.d, perturbation(rng, n, 0.5));
    CircularOrdering pi(inst.cycle);
    auto res = nnls_fit(d, pi);
    double clamped = weighted_residual(d, clamp_nonnegative(lambda_formula(d, pi)));
    EXPECT_LE(res.residual, clamped + 1e-12);
    EXPECT_TRUE(res.kkt);
    for (const auto& e : res.system) EXPECT_GE(e.weight, 0.0);
  }
}

TEST(Nnls, MatchesSupportEnumeration) {
  oracle::Rng rng(55);
  for (int trial = 0; trial < 15; ++trial) {
    auto inst = oracle::random_circular<double>(rng, 5);
    auto d = perturbed(inst.d, perturbation(rng, 5, 1.5));
    auto basis = all_circular_splits(CircularOrdering(inst.cycle));
    auto res = nnls_fit(d, basis);
    EXPECT_NEAR(res.residual, brute_nnls_residual(d, basis), 1e-9);
  }
}

TEST(Nnls, ResidualReportedMatchesWeights) {
  oracle::Rng rng(56);
  auto inst = oracle::random_circular<double>(rng, 7);
  auto d = perturbed(inst.d, perturbation(rng, 7, 1.0));
  auto res = nnls_fit(d, CircularOrdering(inst.cycle));
  SplitWeights<double> w(res.system.begin(), res.system.end());
  EXPECT_NEAR(weighted_residual(d, w), res.residual, 1e-9);
}

TEST(Nnls, PairWeights) {
  oracle::Rng rng(57);
  auto inst = oracle::random_circular<double>(rng, 6);
  auto d = perturbed(inst.d, perturbation(rng, 6, 1.0));
  CircularOrdering pi(inst.cycle);
  PairWeights twos(6, std::vector<double>(6, 2.0));
  auto plain = nnls_fit(d, pi);
  auto doubled = nnls_fit(d, pi, twos);
  EXPECT_NEAR(doubled.residual, std::sqrt(2.0) * plain.residual, 1e-9);
  for (const auto& e : plain.system) EXPECT_NEAR(doubled.system.weight(e.split), e.weight, 1e-8);
  PairWeights bad(6, std::vector<double>(6, -1.0));
  EXPECT_THROW(nnls_fit(d, pi, bad), InputError);
  EXPECT_THROW(nnls_fit(d, pi, PairWeights(3)), InputError);
}

TEST(Nnls, ArbitraryBasis) {
  // A tree basis on a tree metric fits exactly.
  oracle::Rng rng(58);
  auto t = oracle::random_tree<double>(rng, 8);
  std::vector<Split> basis(t.all_splits.begin(), t.all_splits.end());
  auto res = nnls_fit(t.d, basis);
  EXPECT_LE(res.residual, 1e-10);
}

TEST(Wls, DecomposableInputsExact) {
  oracle::Rng rng(59);
  for (int trial = 0; trial < 10; ++trial) {
    std::size_t n = 5 + trial % 3;
    auto inst = oracle::random_circular<Rational>(rng, n);
    auto splits = all_circular_splits(CircularOrdering(inst.cycle));
    // Only one ordering is consistent, so eta vanishes off its n tour edges
    // and the fit is underdetermined; the identity holds regardless.
    auto id = wls_length_identity_check(inst.d, splits);
    EXPECT_EQ(id.lhs, id.rhs);
    Rational tour = 0;
    for (std::size_t k = 0; k < n; ++k) tour += inst.d(inst.cycle[k], inst.cycle[(k + 1) % n]);
    EXPECT_EQ(id.lhs, tour / 2);
  }
}

TEST(Wls, TreeSystemExact) {
  oracle::Rng rng(60);
  for (int trial = 0; trial < 10; ++trial) {
    std::size_t n = 5 + trial % 3;
    auto t = oracle::random_tree<Rational>(rng, n);
    std::vector<Split> splits(t.all_splits.begin(), t.all_splits.end());
    auto id = wls_length_identity_check(t.d, splits);
    EXPECT_EQ(id.lhs, id.rhs);
  }
}

TEST(Wls, IdentityHoldsOnGenericMaps) {
  oracle::Rng rng(61);
  for (int trial = 0; trial < 12; ++trial) {
    std::size_t n = 5 + trial % 3;
    auto dr = oracle::random_map<Rational>(rng, n);
    std::vector<Split> splits;
    if (trial % 2) {
      auto t = oracle::random_tree<Rational>(rng, n);
      splits.assign(t.all_splits.begin(), t.all_splits.end());
    } else {
      splits = all_circular_splits(CircularOrdering(oracle::random_permutation(rng, n)));
    }
    auto exact = wls_length_identity_check(dr, splits);
    EXPECT_EQ(exact.lhs, exact.rhs);
    auto approx = wls_length_identity_check(to_double_map(dr), splits);
    EXPECT_NEAR(approx.lhs, approx.rhs, 1e-9);
  }
}

TEST(Wls, NeedsTrivialSplits) {
  auto d = DissimilarityMap<Rational>(5);
  EXPECT_THROW(wls_length_identity_check(d, {Split(5, {0, 1})}), InputError);
}

TEST(Wls, RankDeficientBasisSetsFreeVariablesToZero) {
  // A split listed twice gives two identical columns.
  auto d = DissimilarityMap<Rational>::from_rows({{0, 2, 2, 2}, {2, 0, 2, 2}, {2, 2, 0, 2}, {2, 2, 2, 0}});
  std::vector<Split> basis = trivial_splits(4);
  basis.push_back(Split(4, {0}));
  std::vector<std::vector<Rational>> ones(4, std::vector<Rational>(4, 1));
  auto x = weighted_least_squares(d, basis, ones);
  EXPECT_EQ(x, (std::vector<Rational>{1, 1, 1, 1, 0}));
}
