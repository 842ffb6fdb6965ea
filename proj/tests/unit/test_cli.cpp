#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "nnet/cli.hpp"
#include "oracles.hpp"

using namespace nnet;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "nnet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("nnet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string file(const std::string& name, const std::string& text) {
    auto p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::filesystem::path dir_;
};

template <class T>
std::string phylip(const DissimilarityMap<T>& d) {
  std::ostringstream os;
  os << d.size() << '\n';
  for (Taxon i = 0; i < d.size(); ++i) {
    os << 't' << i;
    for (Taxon j = 0; j < d.size(); ++j) os << ' ' << format_scalar(d(i, j));
    os << '\n';
  }
  return os.str();
}

std::vector<std::string> lines_starting(const std::string& text, const std::string& prefix) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);)
    if (line.rfind(prefix, 0) == 0) out.push_back(line.substr(prefix.size()));
  return out;
}

std::set<std::string> leaf_sets_of_newick(const std::string& s) {
  // Every parenthesised group below the root, as a sorted comma list.
  std::set<std::string> out;
  std::vector<std::vector<std::string>> stack;
  std::string name;
  for (char c : s) {
    if (c == '(') {
      stack.emplace_back();
    } else if (c == ',' || c == ')') {
      if (!name.empty()) stack.back().push_back(name), name.clear();
      if (c == ')') {
        auto inner = stack.back();
        stack.pop_back();
        if (!stack.empty()) {
          stack.back().insert(stack.back().end(), inner.begin(), inner.end());
          std::sort(inner.begin(), inner.end());
          std::string key;
          for (const auto& x : inner) key += x + ",";
          out.insert(key);
        }
      }
    } else if (c != ';' && c != '\n') {
      name += c;
    }
  }
  return out;
}

// Printed split sides omit t0, as do the groups under t0's attachment node.
std::set<std::string> split_sides(const std::vector<std::string>& rows) {
  std::set<std::string> out;
  for (const auto& row : rows) {
    std::set<std::string> side;
    std::istringstream in(row);
    for (std::string x; std::getline(in, x, ',');) side.insert(x);
    std::string key;
    for (const auto& x : side) key += x + ",";
    out.insert(key);
  }
  return out;
}

}  // namespace

TEST_F(Cli, EnumerateHasTheSequence) {
  auto r = run({"enumerate", "--n", "6"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("6\t60\t14\t840\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("4\t3\t2\t6\n"), std::string::npos);
  EXPECT_EQ(run({"enumerate", "--n", "2"}).code, 1);
}

TEST_F(Cli, TreeWeightingMatchesNj) {
  oracle::Rng rng(90);
  for (int trial = 0; trial < 10; ++trial) {
    std::size_t n = 5 + trial % 6;
    auto in = file("d.phy", phylip(oracle::random_map<Rational>(rng, n)));
    auto a = run({"nnet", "--arith", "rational", "--weighting", "tree", "--alpha", "0.5", in});
    auto b = run({"nj", "--arith", "rational", in});
    ASSERT_EQ(a.code, 0) << a.err;
    ASSERT_EQ(b.code, 0) << b.err;
    auto splits = lines_starting(a.out, "split\t");
    EXPECT_EQ(splits.size(), n - 3);
    EXPECT_EQ(split_sides(splits), leaf_sets_of_newick(b.out)) << a.out << b.out;
  }
}

TEST_F(Cli, NnetWritesNexusAndTrace) {
  oracle::Rng rng(91);
  auto inst = oracle::random_circular<double>(rng, 6);
  auto in = file("c.phy", phylip(inst.d));
  auto r = run({"nnet", in, "--nexus", path("o.nex"), "--trace", path("o.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream nex(path("o.nex"));
  std::stringstream ns;
  ns << nex.rdbuf();
  auto doc = read_nexus(ns.str());
  EXPECT_EQ(doc.labels.size(), 6u);
  ASSERT_TRUE(doc.cycle.has_value());
  EXPECT_EQ(doc.cycle->order(), oracle::canonical_cycle(inst.cycle));
  EXPECT_EQ(doc.splits.size(), 15u);
  std::ifstream tr(path("o.jsonl"));
  int records = 0;
  for (std::string line; std::getline(tr, line);) ++records;
  EXPECT_EQ(records, 1 + 5 + 1);
}

TEST_F(Cli, RationalArithmetic) {
  auto in = file("q.phy", "4\na 0 1/3 1 1\nb 1/3 0 1 1\nc 1 1 0 1/3\nd 1 1 1/3 0\n");
  auto r = run({"nnet", "--arith", "rational", in});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines_starting(r.out, "split\t"), (std::vector<std::string>{"c,d"}));
  auto l = run({"length", "--arith", "rational", in, "--blocks", "a,b|c,d"});
  ASSERT_EQ(l.code, 0) << l.err;
  EXPECT_NE(l.out.find("orderings\t2\n"), std::string::npos);
  // Both tours: 1/3 + 1/3 + 1 + 1, halved.
  EXPECT_NE(l.out.find("balanced-length\t4/3\n"), std::string::npos) << l.out;
}

TEST_F(Cli, TspOnSt70) {
  auto r = run({"tsp", std::string(NNET_TEST_DATA_DIR) + "/st70.tsp"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto len = lines_starting(r.out, "length\t");
  ASSERT_EQ(len.size(), 1u);
  double v = std::stod(len[0]);
  EXPECT_GE(v, 678.598);
  EXPECT_LE(v, 792.0);
  auto rounded = run({"tsp", "--round", "tsplib", std::string(NNET_TEST_DATA_DIR) + "/st70.tsp"});
  EXPECT_EQ(rounded.code, 0);
}

TEST_F(Cli, CheckReports) {
  oracle::Rng rng(92);
  auto inst = oracle::random_circular<Rational>(rng, 6);
  auto in = file("c.phy", phylip(inst.d));
  auto r = run({"check", "--arith", "rational", in});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("four-point\tno"), std::string::npos);
  EXPECT_NE(r.out.find("kalmanson\tyes"), std::string::npos);
  auto t = oracle::random_tree<Rational>(rng, 6);
  auto tin = file("t.phy", phylip(t.d));
  auto tr = run({"check", "--arith", "rational", tin, "--ordering", "t0,t1,t2,t3,t4,t5"});
  ASSERT_EQ(tr.code, 0) << tr.err;
  EXPECT_NE(tr.out.find("four-point\tyes"), std::string::npos);
  EXPECT_EQ(run({"check", tin, "--ordering", "t0,t1"}).code, 1);
  EXPECT_EQ(run({"check", tin, "--ordering", "t0,t1,t2,t3,t4,zz"}).code, 1);
}

TEST_F(Cli, EstimateMethods) {
  oracle::Rng rng(93);
  auto inst = oracle::random_circular<Rational>(rng, 5);
  auto in = file("c.phy", phylip(inst.d));
  auto r = run({"estimate", "--arith", "rational", "--method", "formula", in});
  ASSERT_EQ(r.code, 0) << r.err;
  std::set<std::string> want;
  for (const auto& [arc, w] : inst.arcs) {
    Split s(5, arc);
    std::string side;
    for (Taxon x : s.other_side()) side += (side.empty() ? "t" : ",t") + std::to_string(x);
    want.insert(format_scalar(w) + "\t" + side);
  }
  std::set<std::string> got;
  std::istringstream lines(r.out);
  for (std::string line; std::getline(lines, line);)
    if (line.rfind("ordering", 0) != 0 && line.rfind("0\t", 0) != 0) got.insert(line);
  EXPECT_EQ(got, want);
  // Float mode reads decimals only.
  EXPECT_EQ(run({"estimate", in}).code, 1);
  in = file("f.phy", phylip(to_double_map(inst.d)));
  for (const char* m : {"clamped", "nnls"}) EXPECT_EQ(run({"estimate", "--method", m, in}).code, 0) << m;
  auto eta = run({"estimate", "--ols-weights", "eta", in});
  EXPECT_EQ(eta.code, 0) << eta.err;
  EXPECT_EQ(run({"estimate", "--ols-weights", "eta", "--method", "formula", in}).code, 1);
  EXPECT_EQ(run({"estimate", "--ols-weights", "eta", "--cap", "1", in}).code, 1);
}

TEST_F(Cli, UsageErrors) {
  auto r = run({"nnet", "--frobnicate", "x"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE((r.out + r.err).find("Usage"), std::string::npos);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"nnet", path("missing.phy")}).code, 1);
  EXPECT_EQ(run({"nnet", "--weighting", "bogus", path("missing.phy")}).code, 1);
  auto in = file("z.phy", "3\na 0 1 1\nb 1 0 1\nc 1 1 0\n");
  EXPECT_EQ(run({"nnet", "--weighting", "tree", "--alpha", "2", in}).code, 1);
  EXPECT_EQ(run({"nnet", "--alpha", "0.3", in}).code, 1);
  EXPECT_EQ(run({"nnet", in}).code, 0);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(Cli, BadMatrixIsInputError) {
  auto in = file("lower.phy", "3\na\nb 1\nc 2 3\n");
  auto r = run({"nnet", in});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("square matrix required"), std::string::npos);
}
