#pragma once

// Command-line driver. Exit codes: 0 success, 1 bad input or usage, 2
// internal invariant failure.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nnet/agglomerate.hpp"
#include "nnet/counting.hpp"
#include "nnet/io.hpp"
#include "nnet/kalmanson.hpp"
#include "nnet/length.hpp"
#include "nnet/tsp.hpp"
#include "nnet/weights.hpp"

namespace nnet {

namespace cli {

inline std::string read_text(const std::string& path) {
  if (path == "-") {
    std::stringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

struct Options {
  std::string input;
  std::string arith = "float";
  std::string weighting = "balanced-tsp";
  std::string alpha = "1/2";
  bool alpha_set = false;
  std::string endpoint_rule = "balanced";
  std::string round = "none";
  std::string method = "nnls";
  std::string ols_weights = "uniform";
  std::string ordering;
  std::string blocks;
  std::string nexus;
  std::string trace;
  double tol = -1;  // negative: per-arithmetic default
  std::uint64_t cap = default_enumeration_cap;
  unsigned n = 0;
};

inline Rational parse_alpha(const Options& o) {
  Rational a = parse_scalar<Rational>(o.alpha);
  if (a < 0 || a > 1) throw InputError("--alpha must lie in [0,1]");
  return a;
}

inline WeightingScheme parse_weighting(const Options& o) {
  if (o.alpha_set && o.weighting != "tree") throw InputError("--alpha only applies to --weighting tree");
  if (o.weighting == "balanced-tsp") return WeightingScheme::balanced_tsp();
  if (o.weighting == "original") return WeightingScheme::original_bm();
  if (o.weighting == "tree") return WeightingScheme::tree(parse_alpha(o));
  throw InputError("unknown weighting: " + o.weighting);
}

inline EndpointRule parse_rule(const Options& o) {
  if (o.endpoint_rule == "balanced") return EndpointRule::BalancedLength;
  if (o.endpoint_rule == "typeset") return EndpointRule::AsTypeset;
  throw InputError("unknown endpoint rule: " + o.endpoint_rule);
}

template <Scalar T>
T tolerance(const Options& o) {
  if (o.tol < 0) return scalar_traits<T>::default_tolerance();
  if constexpr (std::same_as<T, Rational>) {
    return parse_scalar<Rational>(format_shortest(o.tol));
  } else {
    return o.tol;
  }
}

inline std::map<std::string, Taxon> label_index(const std::vector<std::string>& labels) {
  std::map<std::string, Taxon> idx;
  for (Taxon x = 0; x < labels.size(); ++x) idx[labels[x]] = x;
  return idx;
}

inline std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

inline std::vector<Taxon> parse_labels(const std::string& list, const std::vector<std::string>& labels) {
  auto idx = label_index(labels);
  std::vector<Taxon> out;
  for (const auto& raw : split_on(list, ',')) {
    std::string l = trim(raw);
    auto it = idx.find(l);
    if (it == idx.end()) throw InputError("unknown taxon label: '" + l + "'");
    out.push_back(it->second);
  }
  return out;
}

inline CircularOrdering parse_ordering(const std::string& list, const std::vector<std::string>& labels) {
  auto v = parse_labels(list, labels);
  if (v.size() != labels.size()) throw InputError("--ordering must list every taxon exactly once");
  return CircularOrdering(v);
}

// "a,b|c|d,e": blocks separated by '|', taxa in path order.
inline PartialCircularOrdering parse_blocks(const std::string& spec, const std::vector<std::string>& labels) {
  if (spec.empty()) return PartialCircularOrdering::singletons(labels.size());
  std::vector<std::vector<Taxon>> blocks;
  for (const auto& b : split_on(spec, '|')) blocks.push_back(parse_labels(b, labels));
  return PartialCircularOrdering(labels.size(), blocks);
}

inline std::string join_labels(const std::vector<Taxon>& xs, const std::vector<std::string>& labels,
                               const char* sep = " ") {
  std::string out;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (k) out += sep;
    out += labels[xs[k]];
  }
  return out;
}

// Machine output uses exact rationals or shortest doubles.
template <Scalar T>
std::string show(const T& v) {
  return format_scalar(v);
}

template <Scalar T>
int run_nnet(const Options& o, std::ostream& out) {
  auto m = read_phylip_distances<T>(read_text(o.input));
  auto scheme = parse_weighting(o);
  NeighborNetOptions<T> opts;
  opts.endpoint_rule = parse_rule(o);
  auto res = run_neighbor_net(m.d, scheme, opts);
  out << "ordering\t" << join_labels(res.ordering.order(), m.labels) << '\n';
  for (const auto& s : res.tree_splits) out << "split\t" << join_labels(s.other_side(), m.labels, ",") << '\n';
  if (!o.trace.empty()) {
    std::ostringstream ts;
    write_trace(ts, res, to_string(scheme), m.labels);
    write_text(o.trace, ts.str());
  }
  if (!o.nexus.empty()) {
    if (m.d.size() < 4) throw InputError("--nexus needs at least 4 taxa");
    // Weights by non-negative least squares on the circular splits.
    auto fit = nnls_fit(to_double_map(m.d), res.ordering);
    WeightedSplitSystem<double> positive(m.d.size());
    for (const auto& e : fit.system)
      if (e.weight > 0) positive.add(e.split, e.weight);
    write_text(o.nexus, write_nexus(make_nexus(m.labels, res.ordering, positive)));
  }
  return 0;
}

template <Scalar T>
int run_nj(const Options& o, std::ostream& out) {
  auto m = read_phylip_distances<T>(read_text(o.input));
  auto tree = neighbor_joining_tree(m.d, parse_alpha(o));
  out << write_newick(tree, m.labels) << '\n';
  return 0;
}

inline int run_tsp(const Options& o, std::ostream& out) {
  Rounding r;
  if (o.round == "none") r = Rounding::None;
  else if (o.round == "tsplib") r = Rounding::Tsplib;
  else throw InputError("unknown rounding: " + o.round);
  auto inst = read_tsplib_euc2d(read_text(o.input), r);
  auto tour = greedy_tsp(inst.d, parse_weighting(o));
  out << "tour\t" << join_labels(tour.ordering.order(), inst.labels) << '\n';
  out << "length\t" << format_shortest(tour.length) << '\n';
  return 0;
}

template <Scalar T>
void report_quadruple(std::ostream& out, const QuadrupleReport<T>& q, const std::vector<std::string>& labels) {
  std::vector<Taxon> t(q.taxa.begin(), q.taxa.end());
  out << "  quadruple " << join_labels(t, labels) << ": sums " << format_human(to_double(q.ij_kl)) << ' '
      << format_human(to_double(q.ik_jl)) << ' ' << format_human(to_double(q.il_jk)) << '\n';
}

template <Scalar T>
int run_check(const Options& o, std::ostream& out) {
  auto m = read_phylip_distances<T>(read_text(o.input));
  T tol = tolerance<T>(o);
  auto fp = find_four_point_violation(m.d, tol);
  out << "four-point\t" << (fp ? "no" : "yes") << '\n';
  if (fp) report_quadruple(out, *fp, m.labels);
  if (m.d.size() < 4) return 0;
  if (!o.ordering.empty()) {
    auto pi = parse_ordering(o.ordering, m.labels);
    auto kv = find_kalmanson_violation(m.d, pi, tol);
    out << "kalmanson\t" << (kv ? "no" : "yes") << '\n';
    if (kv) report_quadruple(out, *kv, m.labels);
    return 0;
  }
  auto found = find_kalmanson_ordering(m.d, KalmansonSearch::NeighborNet, tol);
  if (!found && m.d.size() <= 9) found = find_kalmanson_ordering(m.d, KalmansonSearch::BruteForce, tol);
  out << "kalmanson\t" << (found ? "yes" : "no") << '\n';
  if (found) out << "ordering\t" << join_labels(found->order(), m.labels) << '\n';
  return 0;
}

template <Scalar T>
int run_estimate(const Options& o, std::ostream& out) {
  auto m = read_phylip_distances<T>(read_text(o.input));
  std::size_t n = m.d.size();
  if (n < 4) throw InputError("estimation needs at least 4 taxa");
  std::optional<NeighborNetResult<T>> nn;
  auto net = [&]() -> const NeighborNetResult<T>& {
    if (!nn) nn = run_neighbor_net(m.d, WeightingScheme::balanced_tsp());
    return *nn;
  };
  CircularOrdering pi = o.ordering.empty() ? net().ordering : parse_ordering(o.ordering, m.labels);
  if (o.ols_weights != "uniform" && o.ols_weights != "eta") throw InputError("unknown --ols-weights: " + o.ols_weights);
  if (o.ols_weights == "eta" && o.method != "nnls") throw InputError("--ols-weights eta needs --method nnls");
  out << "ordering\t" << join_labels(pi.order(), m.labels) << '\n';
  auto print = [&](const Split& s, const std::string& w) {
    out << w << '\t' << join_labels(s.other_side(), m.labels, ",") << '\n';
  };
  if (o.method == "formula" || o.method == "clamped") {
    auto w = lambda_formula(m.d, pi);
    if (o.method == "clamped") w = clamp_nonnegative(w);
    for (const auto& e : w) print(e.split, show(e.weight));
    return 0;
  }
  if (o.method != "nnls") throw InputError("unknown method: " + o.method);
  PairWeights pw;
  if (o.ols_weights == "eta") {
    // Adjacency counts over the orderings consistent with the neighbor-net
    // tree plus the trivial splits.
    std::vector<Split> s = net().tree_splits;
    for (const auto& t : trivial_splits(n)) s.push_back(t);
    EtaTable eta = split_system_eta(n, s, o.cap);
    pw.assign(n, std::vector<double>(n, 0.0));
    for (Taxon i = 0; i < n; ++i)
      for (Taxon j = 0; j < n; ++j)
        if (i != j) pw[i][j] = static_cast<double>(eta(i, j));
  }
  auto fit = nnls_fit(to_double_map(m.d), pi, pw);
  for (const auto& e : fit.system) print(e.split, format_shortest(e.weight));
  out << "residual\t" << format_shortest(fit.residual) << '\n';
  if (!o.nexus.empty()) write_text(o.nexus, write_nexus(make_nexus(m.labels, pi, fit.system)));
  return 0;
}

template <Scalar T>
int run_length(const Options& o, std::ostream& out) {
  auto m = read_phylip_distances<T>(read_text(o.input));
  auto c = parse_blocks(o.blocks, m.labels);
  auto orderings = enumerate_consistent_orderings(c, o.cap);
  T l = length_from_eta(m.d, eta_of(orderings, m.d.size()));
  out << "orderings\t" << orderings.size() << '\n';
  out << "balanced-length\t" << show(l) << '\n';
  return 0;
}

inline int run_enumerate(const Options& o, std::ostream& out) {
  if (o.n < 3) throw InputError("--n must be at least 3");
  out << "n\tcircular-orderings\tassociahedron-vertices\tneighbor-net-outputs\n";
  for (unsigned k = 3; k <= o.n; ++k) {
    out << k << '\t' << count_distinct_orderings(k).str() << '\t' << count_associahedron_vertices(k).str() << '\t'
        << count_nnet_outputs(k).str() << '\n';
  }
  return 0;
}

template <class F>
int with_arith(const Options& o, F&& f) {
  if (o.arith == "float") return f(double{});
  if (o.arith == "rational") return f(Rational{});
  throw InputError("unknown arithmetic: " + o.arith);
}

}  // namespace cli

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace cli;
  Options o;
  CLI::App app{"Circular split networks by neighbor-net agglomeration"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  auto input = [&](CLI::App* sc, const char* what) { sc->add_option("input", o.input, what)->required(); };
  auto arith = [&](CLI::App* sc) {
    sc->add_option("--arith", o.arith, "float or rational")->check(CLI::IsMember({"float", "rational"}));
  };
  auto weighting = [&](CLI::App* sc) {
    sc->add_option("--weighting", o.weighting, "balanced-tsp, tree or original")
        ->check(CLI::IsMember({"balanced-tsp", "tree", "original"}));
    sc->add_option("--alpha", o.alpha, "tree weighting parameter in [0,1]")->each([&](const std::string&) {
      o.alpha_set = true;
    });
  };

  auto* nnet_cmd = app.add_subcommand("nnet", "circular ordering and tree splits");
  input(nnet_cmd, "PHYLIP distance file");
  arith(nnet_cmd);
  weighting(nnet_cmd);
  nnet_cmd->add_option("--endpoint-rule", o.endpoint_rule, "balanced or typeset")
      ->check(CLI::IsMember({"balanced", "typeset"}));
  nnet_cmd->add_option("--nexus", o.nexus, "write a Nexus file with NNLS weights");
  nnet_cmd->add_option("--trace", o.trace, "write a JSONL agglomeration trace");

  auto* nj_cmd = app.add_subcommand("nj", "neighbor-joining tree as Newick");
  input(nj_cmd, "PHYLIP distance file");
  arith(nj_cmd);
  nj_cmd->add_option("--alpha", o.alpha, "distance reduction parameter in [0,1]");

  auto* tsp_cmd = app.add_subcommand("tsp", "greedy tour for a TSPLIB EUC_2D instance");
  input(tsp_cmd, "TSPLIB file");
  weighting(tsp_cmd);
  tsp_cmd->add_option("--round", o.round, "none or tsplib")->check(CLI::IsMember({"none", "tsplib"}));

  auto* check_cmd = app.add_subcommand("check", "four-point and Kalmanson report");
  input(check_cmd, "PHYLIP distance file");
  arith(check_cmd);
  check_cmd->add_option("--ordering", o.ordering, "comma-separated labels");
  check_cmd->add_option("--tol", o.tol, "comparison tolerance")->check(CLI::NonNegativeNumber);

  auto* est_cmd = app.add_subcommand("estimate", "split weights for a circular ordering");
  input(est_cmd, "PHYLIP distance file");
  arith(est_cmd);
  est_cmd->add_option("--ordering", o.ordering, "comma-separated labels; default from neighbor-net");
  est_cmd->add_option("--method", o.method, "formula, clamped or nnls")
      ->check(CLI::IsMember({"formula", "clamped", "nnls"}));
  est_cmd->add_option("--ols-weights", o.ols_weights, "uniform or eta")->check(CLI::IsMember({"uniform", "eta"}));
  est_cmd->add_option("--cap", o.cap, "enumeration cap")->check(CLI::PositiveNumber);
  est_cmd->add_option("--nexus", o.nexus, "write a Nexus file");

  auto* len_cmd = app.add_subcommand("length", "balanced length of a partial ordering");
  input(len_cmd, "PHYLIP distance file");
  arith(len_cmd);
  len_cmd->add_option("--blocks", o.blocks, "blocks like 'a,b|c|d,e'; default all singletons");
  len_cmd->add_option("--cap", o.cap, "enumeration cap")->check(CLI::PositiveNumber);

  auto* enum_cmd = app.add_subcommand("enumerate", "counting table");
  enum_cmd->add_option("--n", o.n, "largest taxon count")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    auto generic = [&](auto tag) -> int {
      using T = decltype(tag);
      if (nnet_cmd->parsed()) return run_nnet<T>(o, out);
      if (nj_cmd->parsed()) return run_nj<T>(o, out);
      if (check_cmd->parsed()) return run_check<T>(o, out);
      if (est_cmd->parsed()) return run_estimate<T>(o, out);
      return run_length<T>(o, out);
    };
    if (tsp_cmd->parsed()) return run_tsp(o, out);
    if (enum_cmd->parsed()) return run_enumerate(o, out);
    return with_arith(o, generic);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const InvariantError& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace nnet
