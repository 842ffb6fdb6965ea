#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace nnet;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Shortest tour by permuting every taxon but 0; returns canonical form.
template <class T>
std::pair<std::vector<Taxon>, T> oracle_tsp(const DissimilarityMap<T>& d) {
  std::size_t n = d.size();
  std::vector<Taxon> v(n);
  std::iota(v.begin(), v.end(), Taxon{0});
  std::optional<T> best;
  std::vector<Taxon> arg;
  do {
    T len(0);
    for (std::size_t k = 0; k < n; ++k) len += d(v[k], v[(k + 1) % n]);
    if (!best || len < *best) {
      best = len;
      arg = v;
    }
  } while (std::next_permutation(v.begin() + 1, v.end()));
  return {oracle::canonical_cycle(arg), *best};
}

const char* two_nodes =
    "NAME : pair\n"
    "TYPE : TSP\n"
    "DIMENSION : 2\n"
    "EDGE_WEIGHT_TYPE : EUC_2D\n"
    "NODE_COORD_SECTION\n"
    "1 0 0\n"
    "2 3 4\n"
    "EOF\n";

}  // namespace

TEST(TourLength, Basic) {
  auto d = DissimilarityMap<Rational>::from_rows({{0, 1, 2, 3}, {1, 0, 4, 5}, {2, 4, 0, 6}, {3, 5, 6, 0}});
  EXPECT_EQ(tour_length(d, CircularOrdering::identity(4)), Rational(1 + 4 + 6 + 3));
  EXPECT_THROW(tour_length(d, CircularOrdering::identity(3)), InputError);
}

TEST(BruteForceTsp, ThreeTaxa) {
  auto d = DissimilarityMap<double>::from_rows({{0, 1, 2}, {1, 0, 3}, {2, 3, 0}});
  auto t = brute_force_tsp(d);
  EXPECT_EQ(t.ordering, CircularOrdering::identity(3));
  EXPECT_EQ(t.length, 6.0);
}

TEST(BruteForceTsp, AllOnesTieBreak) {
  DissimilarityMap<Rational> d(7);
  for (Taxon i = 0; i < 7; ++i)
    for (Taxon j = i + 1; j < 7; ++j) d.set(i, j, 1);
  auto t = brute_force_tsp(d);
  EXPECT_EQ(t.ordering, CircularOrdering::identity(7));
  EXPECT_EQ(t.length, Rational(7));
}

TEST(BruteForceTsp, MatchesPermutationOracle) {
  oracle::Rng rng(70);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t n = 4 + trial % 5;
    auto d = oracle::random_map<Rational>(rng, n);
    auto t = brute_force_tsp(d);
    auto [cyc, len] = oracle_tsp(d);
    EXPECT_EQ(t.length, len);
    EXPECT_EQ(tour_length(d, t.ordering), len);
  }
}

TEST(BruteForceTsp, Cap) {
  EXPECT_THROW(brute_force_tsp(DissimilarityMap<double>(12)), InputError);
  EXPECT_THROW(brute_force_tsp(DissimilarityMap<double>(2)), InputError);
}

TEST(GreedyTsp, NeverBeatsOptimum) {
  oracle::Rng rng(71);
  for (int trial = 0; trial < 20; ++trial) {
    auto d = oracle::random_map<Rational>(rng, 8);
    for (auto w : {WeightingScheme::balanced_tsp(), WeightingScheme::tree(), WeightingScheme::original_bm()})
      EXPECT_LE(brute_force_tsp(d).length, greedy_tsp(d, w).length);
  }
}

TEST(GreedyTsp, OptimalOnGenericKalmansonInputs) {
  oracle::Rng rng(72);
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t n = 4 + trial % 6;
    auto inst = oracle::random_circular<Rational>(rng, n);
    auto g = greedy_tsp(inst.d);
    auto b = brute_force_tsp(inst.d);
    EXPECT_EQ(g.ordering, b.ordering);
    EXPECT_EQ(g.length, b.length);
    EXPECT_EQ(g.ordering.order(), oracle::canonical_cycle(inst.cycle));
  }
}

TEST(GreedyTsp, InputOrderIndependent) {
  oracle::Rng rng(73);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t n = 5 + trial % 8;
    auto d = oracle::random_map<Rational>(rng, n);
    auto perm = oracle::random_permutation(rng, n);
    auto e = oracle::relabel(d, perm);
    EXPECT_EQ(greedy_tsp(d).length, greedy_tsp(e).length);
  }
}

TEST(TwoOpt, LengthChangeMatchesEdgeSwap) {
  oracle::Rng rng(74);
  auto d = oracle::random_map<Rational>(rng, 7);
  CircularOrdering pi(oracle::random_permutation(rng, 7));
  for (std::size_t a = 1; a < 7; ++a)
    for (std::size_t b = a; b < 6; ++b) {
      auto next = apply_two_opt(pi, a, b);
      Rational delta = d(pi[a - 1], pi[b]) + d(pi[a], pi[b + 1]) - d(pi[a - 1], pi[a]) - d(pi[b], pi[b + 1]);
      EXPECT_EQ(tour_length(d, next), tour_length(d, pi) + delta);
    }
  EXPECT_THROW(apply_two_opt(pi, 3, 2), InputError);
  EXPECT_THROW(apply_two_opt(pi, 0, 7), InputError);
}

TEST(Tsplib, TwoNodesBothModes) {
  auto a = read_tsplib_euc2d(two_nodes, Rounding::None);
  auto b = read_tsplib_euc2d(two_nodes, Rounding::Tsplib);
  EXPECT_EQ(a.name, "pair");
  EXPECT_EQ(a.d(0, 1), 5.0);
  EXPECT_EQ(b.d(0, 1), 5.0);
  EXPECT_EQ(a.labels, (std::vector<std::string>{"1", "2"}));
}

TEST(Tsplib, RoundsToNearest) {
  std::string text = "TYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 1 1\n3 2 3\n";
  auto a = read_tsplib_euc2d(text, Rounding::None);
  auto b = read_tsplib_euc2d(text, Rounding::Tsplib);
  EXPECT_DOUBLE_EQ(a.d(0, 1), std::sqrt(2.0));
  EXPECT_EQ(b.d(0, 1), 1.0);
  EXPECT_EQ(b.d(0, 2), 4.0);  // sqrt(13) = 3.61
}

TEST(Tsplib, Errors) {
  EXPECT_THROW(read_tsplib_euc2d("DIMENSION: 1\nEDGE_WEIGHT_TYPE: GEO\nNODE_COORD_SECTION\n1 0 0\n"), InputError);
  EXPECT_THROW(read_tsplib_euc2d("DIMENSION: 3\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 1 1\n"),
               InputError);
  EXPECT_THROW(read_tsplib_euc2d("DIMENSION 3\n"), InputError);
  EXPECT_THROW(read_tsplib_euc2d("TYPE: ATSP\nDIMENSION: 1\nEDGE_WEIGHT_TYPE: EUC_2D\n"), InputError);
  EXPECT_THROW(read_tsplib_euc2d("DIMENSION: 2\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 0\n2 1 1\n"),
               InputError);
  EXPECT_THROW(read_tsplib_euc2d("DIMENSION: 2\nEDGE_WEIGHT_TYPE: EUC_2D\n"), InputError);
  EXPECT_THROW(read_tsplib_euc2d("DIMENSION: x\nEDGE_WEIGHT_TYPE: EUC_2D\n"), InputError);
}

TEST(Tsplib, St70Ranking) {
  auto inst = read_tsplib_euc2d(read_file(std::string(NNET_TEST_DATA_DIR) + "/st70.tsp"));
  ASSERT_EQ(inst.d.size(), 70u);
  auto bal = greedy_tsp(inst.d, WeightingScheme::balanced_tsp());
  auto tree = greedy_tsp(inst.d, WeightingScheme::tree());
  EXPECT_GE(bal.length, 678.598);
  EXPECT_LE(bal.length, 780.0);
  EXPECT_LT(bal.length, tree.length);
  EXPECT_NEAR(bal.length, tour_length(inst.d, bal.ordering), 1e-9);
}
