#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nnet/agglomerate.hpp"
#include "nnet/dissimilarity.hpp"
#include "nnet/error.hpp"
#include "nnet/ordering.hpp"

namespace nnet {

template <Scalar T>
struct Tour {
  CircularOrdering ordering;
  T length{};  // full cycle, not halved
};

template <Scalar T>
T tour_length(const DissimilarityMap<T>& d, const CircularOrdering& pi) {
  if (pi.size() != d.size()) throw InputError("ordering and map sizes differ");
  T acc(0);
  for (std::size_t p = 0; p < pi.size(); ++p) acc += d(pi[p], pi[p + 1]);
  return acc;
}

// Neighbor-net used as a greedy tour builder.
template <Scalar T>
Tour<T> greedy_tsp(const DissimilarityMap<T>& d, const WeightingScheme& scheme = WeightingScheme::balanced_tsp()) {
  auto res = run_neighbor_net(d, scheme);
  return {res.ordering, tour_length(d, res.ordering)};
}

inline constexpr std::size_t brute_force_tsp_cap = 11;

// Exact optimum over all canonical orderings; ties go to the
// lexicographically least canonical ordering.
template <Scalar T>
Tour<T> brute_force_tsp(const DissimilarityMap<T>& d) {
  std::size_t n = d.size();
  if (n < 3) throw InputError("tours need at least 3 taxa");
  if (n > brute_force_tsp_cap) throw InputError("brute-force TSP is capped at n = 11");
  std::optional<Tour<T>> best;
  for_each_canonical_ordering(n, [&](const CircularOrdering& pi) {
    T len = tour_length(d, pi);
    if (!best || definitely_less(len, best->length)) best = Tour<T>{pi, len};
  });
  return *best;
}

// Reverses the taxa at positions a..b (inclusive, a <= b): the 2-opt move
// replacing edges (x_{a-1},x_a) and (x_b,x_{b+1}) by (x_{a-1},x_b) and
// (x_a,x_{b+1}).
inline CircularOrdering apply_two_opt(const CircularOrdering& pi, std::size_t a, std::size_t b) {
  if (a > b || b >= pi.size()) throw InputError("invalid 2-opt segment");
  std::vector<Taxon> v = pi.order();
  std::reverse(v.begin() + static_cast<std::ptrdiff_t>(a), v.begin() + static_cast<std::ptrdiff_t>(b) + 1);
  return CircularOrdering(v);
}

enum class Rounding { None, Tsplib };

struct TsplibInstance {
  std::string name;
  std::vector<std::string> labels;  // node ids as written
  std::vector<std::pair<double, double>> coords;
  DissimilarityMap<double> d;
};

// TSPLIB subset: EUC_2D with NODE_COORD_SECTION. Rounding::Tsplib applies
// the standard nint; Rounding::None keeps real Euclidean distances.
inline TsplibInstance read_tsplib_euc2d(const std::string& text, Rounding rounding = Rounding::None) {
  std::istringstream in(text);
  std::string line;
  TsplibInstance out;
  std::optional<std::size_t> dim;
  std::string weight_type;
  bool coords = false;
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (!coords) {
      if (line == "NODE_COORD_SECTION") {
        coords = true;
        continue;
      }
      if (line == "EOF") break;
      auto colon = line.find(':');
      if (colon == std::string::npos) throw InputError("malformed TSPLIB header line: " + line);
      std::string key = trim(line.substr(0, colon)), value = trim(line.substr(colon + 1));
      if (key == "NAME") out.name = value;
      else if (key == "DIMENSION") {
        try {
          dim = std::stoul(value);
        } catch (const std::exception&) {
          throw InputError("bad DIMENSION: " + value);
        }
      } else if (key == "EDGE_WEIGHT_TYPE") weight_type = value;
      else if (key == "TYPE" && value != "TSP") throw InputError("unsupported TSPLIB TYPE: " + value);
      continue;
    }
    if (line == "EOF") break;
    std::istringstream row(line);
    std::string id;
    double x, y;
    if (!(row >> id >> x >> y)) throw InputError("malformed coordinate line: " + line);
    out.labels.push_back(id);
    out.coords.emplace_back(x, y);
  }
  if (weight_type != "EUC_2D") throw InputError("unsupported EDGE_WEIGHT_TYPE: '" + weight_type + "'");
  if (!coords) throw InputError("missing NODE_COORD_SECTION");
  if (!dim) throw InputError("missing DIMENSION");
  if (*dim != out.coords.size()) {
    throw InputError("DIMENSION " + std::to_string(*dim) + " but " + std::to_string(out.coords.size()) +
                     " coordinates");
  }
  std::size_t n = out.coords.size();
  out.d = DissimilarityMap<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double dx = out.coords[i].first - out.coords[j].first, dy = out.coords[i].second - out.coords[j].second;
      double e = std::sqrt(dx * dx + dy * dy);
      out.d.set(i, j, rounding == Rounding::Tsplib ? std::floor(e + 0.5) : e);
    }
  return out;
}

}  // namespace nnet
