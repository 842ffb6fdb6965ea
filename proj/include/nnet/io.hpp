#pragma once

// File formats: PHYLIP square distances (read), Nexus TAXA/SPLITS (read and
// write), line-delimited JSON traces, Newick for neighbor-joining trees.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nnet/agglomerate.hpp"
#include "nnet/dissimilarity.hpp"
#include "nnet/error.hpp"
#include "nnet/ordering.hpp"
#include "nnet/scalar.hpp"
#include "nnet/split.hpp"

namespace nnet {

// Shortest decimal that reads back to the same double.
inline std::string format_shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw InvariantError("number formatting failed");
  return std::string(buf, end);
}

// Six significant digits, for reports meant for people.
inline std::string format_human(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

template <Scalar T>
std::string format_scalar(const T& v) {
  if constexpr (std::same_as<T, Rational>) {
    return v.str();
  } else {
    return format_shortest(v);
  }
}

template <Scalar T>
struct LabeledMatrix {
  std::vector<std::string> labels;
  DissimilarityMap<T> d;
};

inline constexpr double phylip_asymmetry_tolerance = 1e-6;

// Square PHYLIP: a count, then one line per taxon holding its label and n
// distances. Rows may not wrap. Mild asymmetry is averaged away.
template <Scalar T>
LabeledMatrix<T> read_phylip_distances(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<std::string>> lines;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (!tok.empty()) lines.push_back(std::move(tok));
  }
  if (lines.empty()) throw InputError("empty PHYLIP input");
  std::size_t n = 0;
  {
    const std::string& h = lines[0][0];
    auto [p, ec] = std::from_chars(h.data(), h.data() + h.size(), n);
    if (ec != std::errc() || p != h.data() + h.size() || n == 0) throw InputError("bad taxon count: " + h);
  }
  if (lines.size() - 1 != n) {
    throw InputError("expected " + std::to_string(n) + " rows, found " + std::to_string(lines.size() - 1));
  }
  LabeledMatrix<T> out;
  std::vector<std::vector<T>> rows(n, std::vector<T>(n));
  std::set<std::string> seen;
  for (std::size_t r = 0; r < n; ++r) {
    const auto& tok = lines[r + 1];
    if (tok.size() != n + 1) {
      throw InputError("square matrix required: row " + std::to_string(r + 1) + " has " +
                       std::to_string(tok.size() - 1) + " values, expected " + std::to_string(n));
    }
    if (!seen.insert(tok[0]).second) throw InputError("duplicate label: " + tok[0]);
    out.labels.push_back(tok[0]);
    for (std::size_t c = 0; c < n; ++c) rows[r][c] = parse_scalar<T>(tok[c + 1]);
  }
  out.d = DissimilarityMap<T>(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i][i] != T(0)) throw InputError("nonzero diagonal entry for " + out.labels[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      const T& a = rows[i][j];
      const T& b = rows[j][i];
      if (a < T(0) || b < T(0)) throw InputError("negative distance between " + out.labels[i] + " and " + out.labels[j]);
      double da = to_double(a), db = to_double(b);
      if (std::abs(da - db) > phylip_asymmetry_tolerance * std::max({std::abs(da), std::abs(db), 1.0})) {
        throw InputError("asymmetric distances between " + out.labels[i] + " and " + out.labels[j]);
      }
      out.d.set(i, j, (a + b) / T(2));
    }
  }
  return out;
}

// Taxa, an optional cycle and a weighted split system.
struct NexusDocument {
  std::vector<std::string> labels;
  std::optional<CircularOrdering> cycle;
  WeightedSplitSystem<double> splits;

  friend bool operator==(const NexusDocument& a, const NexusDocument& b) {
    if (a.labels != b.labels || a.cycle != b.cycle || a.splits.size() != b.splits.size()) return false;
    for (std::size_t k = 0; k < a.splits.size(); ++k) {
      const auto& x = a.splits.entries()[k];
      const auto& y = b.splits.entries()[k];
      if (!(x.split == y.split) || x.weight != y.weight) return false;
    }
    return true;
  }
};

inline std::string nexus_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

// Dialect: uppercase keywords, 1-based indices, each split lists the side
// without the first taxon, a bracketed id/size comment per split row.
inline std::string write_nexus(const NexusDocument& doc) {
  std::size_t n = doc.labels.size();
  if (n < 3) throw InputError("Nexus output needs at least 3 taxa");
  if (doc.splits.n() != n) throw InputError("split system and label counts differ");
  if (doc.cycle && doc.cycle->size() != n) throw InputError("cycle and label counts differ");
  std::ostringstream os;
  os << "#NEXUS\n\nBEGIN TAXA;\n  DIMENSIONS NTAX=" << n << ";\n  TAXLABELS";
  for (const auto& l : doc.labels) os << ' ' << nexus_quote(l);
  os << ";\nEND;\n\nBEGIN SPLITS;\n  DIMENSIONS NTAX=" << n << " NSPLITS=" << doc.splits.size() << ";\n";
  os << "  FORMAT LABELS=NO WEIGHTS=YES CONFIDENCES=NO INTERVALS=NO;\n";
  if (doc.cycle) {
    os << "  CYCLE";
    for (Taxon x : doc.cycle->order()) os << ' ' << x + 1;
    os << ";\n";
  }
  os << "  MATRIX\n";
  std::size_t id = 0;
  for (const auto& e : doc.splits) {
    auto side = e.split.other_side();
    os << "    [" << ++id << ", size=" << side.size() << "] " << format_shortest(e.weight);
    for (Taxon x : side) os << ' ' << x + 1;
    os << ",\n";
  }
  os << "  ;\nEND;\n";
  return os.str();
}

template <Scalar T>
NexusDocument make_nexus(const std::vector<std::string>& labels, const CircularOrdering& cycle,
                         const WeightedSplitSystem<T>& sys) {
  NexusDocument doc;
  doc.labels = labels;
  doc.cycle = cycle;
  doc.splits = WeightedSplitSystem<double>(sys.n());
  for (const auto& e : sys) doc.splits.add(e.split, to_double(e.weight));
  return doc;
}

namespace detail {

// Nexus tokens: words, quoted labels, and single-character punctuation.
// Bracket comments are dropped.
class NexusLexer {
 public:
  explicit NexusLexer(const std::string& text) {
    std::size_t p = 0;
    while (p < text.size()) {
      char c = text[p];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++p;
      } else if (c == '[') {
        auto e = text.find(']', p);
        if (e == std::string::npos) throw InputError("unterminated Nexus comment");
        p = e + 1;
      } else if (c == '\'') {
        std::string word;
        ++p;
        while (true) {
          if (p >= text.size()) throw InputError("unterminated quoted label");
          if (text[p] == '\'') {
            if (p + 1 < text.size() && text[p + 1] == '\'') {
              word += '\'';
              p += 2;
              continue;
            }
            ++p;
            break;
          }
          word += text[p++];
        }
        toks_.push_back({word, true});
      } else if (c == ';' || c == ',' || c == '=') {
        toks_.push_back({std::string(1, c), false});
        ++p;
      } else {
        std::size_t b = p;
        while (p < text.size() && !std::isspace(static_cast<unsigned char>(text[p])) &&
               std::string(";,=[").find(text[p]) == std::string::npos)
          ++p;
        toks_.push_back({text.substr(b, p - b), false});
      }
    }
  }

  bool done() const { return pos_ >= toks_.size(); }
  const std::string& peek() const {
    if (done()) throw InputError("unexpected end of Nexus input");
    return toks_[pos_].text;
  }
  std::string next() {
    std::string t = peek();
    ++pos_;
    return t;
  }
  // Keyword comparison ignores case; quoted tokens never match keywords.
  bool at(const std::string& kw) const {
    return !done() && !toks_[pos_].quoted && upper(toks_[pos_].text) == kw;
  }
  void expect(const std::string& kw) {
    if (!at(kw)) throw InputError("expected '" + kw + "' in Nexus input, found '" + (done() ? "" : peek()) + "'");
    ++pos_;
  }
  void skip_statement() {
    while (!at(";")) next();
    ++pos_;
  }

  static std::string upper(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
  }

 private:
  struct Token {
    std::string text;
    bool quoted;
  };
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

inline std::size_t parse_count(const std::string& s) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw InputError("expected an integer in Nexus input: " + s);
  return v;
}

}  // namespace detail

inline NexusDocument read_nexus(const std::string& text) {
  detail::NexusLexer lx(text);
  lx.expect("#NEXUS");
  NexusDocument doc;
  std::optional<std::size_t> ntax;
  bool have_splits = false;
  while (!lx.done()) {
    lx.expect("BEGIN");
    std::string block = detail::NexusLexer::upper(lx.next());
    lx.expect(";");
    if (block == "TAXA") {
      while (!lx.at("END") && !lx.at("ENDBLOCK")) {
        if (lx.at("DIMENSIONS")) {
          lx.next();
          while (!lx.at(";")) {
            std::string key = detail::NexusLexer::upper(lx.next());
            lx.expect("=");
            std::string v = lx.next();
            if (key == "NTAX") ntax = detail::parse_count(v);
          }
          lx.next();
        } else if (lx.at("TAXLABELS")) {
          lx.next();
          while (!lx.at(";")) doc.labels.push_back(lx.next());
          lx.next();
        } else {
          lx.skip_statement();
        }
      }
      lx.next();
      lx.expect(";");
      if (!ntax || *ntax != doc.labels.size()) throw InputError("TAXLABELS count does not match NTAX");
    } else if (block == "SPLITS") {
      if (!ntax) throw InputError("SPLITS block before TAXA block");
      std::size_t n = *ntax;
      std::optional<std::size_t> nsplits;
      bool weights = true;
      doc.splits = WeightedSplitSystem<double>(n);
      have_splits = true;
      while (!lx.at("END") && !lx.at("ENDBLOCK")) {
        if (lx.at("DIMENSIONS") || lx.at("FORMAT")) {
          bool dims = lx.at("DIMENSIONS");
          lx.next();
          while (!lx.at(";")) {
            std::string key = detail::NexusLexer::upper(lx.next());
            lx.expect("=");
            std::string v = detail::NexusLexer::upper(lx.next());
            if (dims && key == "NTAX" && detail::parse_count(v) != n) throw InputError("SPLITS NTAX differs from TAXA");
            if (dims && key == "NSPLITS") nsplits = detail::parse_count(v);
            if (!dims && key == "WEIGHTS") weights = v == "YES";
            if (!dims && key == "LABELS" && v == "YES") throw InputError("labelled split rows are not supported");
            if (!dims && (key == "CONFIDENCES" || key == "INTERVALS") && v == "YES") {
              throw InputError("split confidences and intervals are not supported");
            }
          }
          lx.next();
        } else if (lx.at("CYCLE")) {
          lx.next();
          std::vector<Taxon> cyc;
          while (!lx.at(";")) {
            std::size_t v = detail::parse_count(lx.next());
            if (v < 1 || v > n) throw InputError("CYCLE index out of range");
            cyc.push_back(v - 1);
          }
          lx.next();
          if (cyc.size() != n) throw InputError("CYCLE must list every taxon once");
          doc.cycle = CircularOrdering(cyc);
        } else if (lx.at("MATRIX")) {
          lx.next();
          while (!lx.at(";")) {
            double w = 1.0;
            if (weights) w = parse_scalar<double>(lx.next());
            std::vector<Taxon> side;
            while (!lx.at(",") && !lx.at(";")) {
              std::size_t v = detail::parse_count(lx.next());
              if (v < 1 || v > n) throw InputError("split member out of range");
              side.push_back(v - 1);
            }
            if (lx.at(",")) lx.next();
            doc.splits.add(Split(n, side), w);
          }
          lx.next();
        } else {
          lx.skip_statement();
        }
      }
      lx.next();
      lx.expect(";");
      if (nsplits && *nsplits != doc.splits.size()) throw InputError("NSPLITS does not match the matrix");
    } else {
      while (!lx.at("END") && !lx.at("ENDBLOCK")) lx.next();
      lx.next();
      lx.expect(";");
    }
  }
  if (!ntax) throw InputError("missing TAXA block");
  if (!have_splits) doc.splits = WeightedSplitSystem<double>(*ntax);
  return doc;
}

// One JSON object per agglomeration step, then a result record.
template <Scalar T>
class TraceWriter {
 public:
  explicit TraceWriter(std::ostream& os) : os_(os) {}

  void header(std::size_t n, const std::string& scheme, const std::vector<std::string>& labels) {
    emit({{"record", "run"}, {"n", n}, {"weighting", scheme}, {"labels", labels}});
  }

  void step(std::size_t index, const AgglomerationStep<T>& s) {
    nlohmann::json j = {{"record", "step"},   {"step", index},         {"m", s.m},
                        {"r", s.r},           {"s", s.s},              {"q", value(s.q)},
                        {"i", s.i},           {"j", s.j},              {"q_hat", value(s.q_hat)},
                        {"candidates", s.candidates}, {"tied_pairs", s.tied_pairs},
                        {"block_r", s.block_r}, {"block_s", s.block_s}, {"merged", s.merged}};
    j["split"] = s.split ? nlohmann::json(s.split->other_side()) : nlohmann::json(nullptr);
    nlohmann::json mu = nlohmann::json::array();
    for (const auto& v : s.mu) mu.push_back(value(v));
    j["mu"] = mu;
    emit(j);
  }

  void result(const CircularOrdering& pi, const std::vector<Split>& tree_splits) {
    nlohmann::json splits = nlohmann::json::array();
    for (const auto& s : tree_splits) splits.push_back(s.other_side());
    emit({{"record", "result"}, {"ordering", pi.order()}, {"tree_splits", splits}});
  }

 private:
  // Rationals as "p/q" strings so nothing is lost.
  static nlohmann::json value(const T& v) {
    if constexpr (std::same_as<T, Rational>) {
      return v.str();
    } else {
      return v;
    }
  }
  void emit(const nlohmann::json& j) { os_ << j.dump() << '\n'; }

  std::ostream& os_;
};

template <Scalar T>
void write_trace(std::ostream& os, const NeighborNetResult<T>& res, const std::string& scheme,
                 const std::vector<std::string>& labels) {
  TraceWriter<T> w(os);
  w.header(res.ordering.size(), scheme, labels);
  for (std::size_t k = 0; k < res.trace.size(); ++k) w.step(k, res.trace[k]);
  w.result(res.ordering, res.tree_splits);
}

inline std::string newick_label(const std::string& s) {
  if (s.find_first_of("()[]':;, \t") == std::string::npos && !s.empty()) return s;
  return nexus_quote(s);
}

// Rooted at the internal node taxon 0 hangs from; no branch lengths.
// Children are ordered by their smallest taxon.
template <Scalar T>
std::string write_newick(const NeighborJoiningTree<T>& tree, const std::vector<std::string>& labels) {
  std::size_t n = labels.size();
  if (tree.final_three.size() != 3) throw InputError("tree is missing its final join");
  std::size_t nodes = n + tree.joins.size() + 1;
  std::size_t centre = nodes - 1;
  std::vector<std::vector<std::size_t>> adj(nodes);
  auto link = [&](std::size_t a, std::size_t b) {
    if (a >= nodes || b >= nodes) throw InputError("tree refers to an unknown node");
    adj[a].push_back(b);
    adj[b].push_back(a);
  };
  for (std::size_t k = 0; k < tree.joins.size(); ++k) {
    link(n + k, tree.joins[k].first);
    link(n + k, tree.joins[k].second);
  }
  for (std::size_t c : tree.final_three) link(centre, c);
  if (adj[0].size() != 1) throw InputError("taxon 0 must be a leaf");

  std::vector<Taxon> min_leaf(nodes, n);
  std::function<Taxon(std::size_t, std::size_t)> lowest = [&](std::size_t u, std::size_t parent) {
    Taxon best = u < n ? u : n;
    for (std::size_t v : adj[u])
      if (v != parent) best = std::min(best, lowest(v, u));
    return min_leaf[u] = best;
  };
  std::size_t root = adj[0][0];
  lowest(root, nodes);
  std::function<std::string(std::size_t, std::size_t)> emit = [&](std::size_t u, std::size_t parent) {
    if (u < n) return newick_label(labels[u]);
    std::vector<std::size_t> kids;
    for (std::size_t v : adj[u])
      if (v != parent) kids.push_back(v);
    std::sort(kids.begin(), kids.end(), [&](std::size_t a, std::size_t b) { return min_leaf[a] < min_leaf[b]; });
    std::string out = "(";
    for (std::size_t k = 0; k < kids.size(); ++k) {
      if (k) out += ',';
      out += emit(kids[k], u);
    }
    return out + ")";
  };
  return emit(root, nodes) + ";";
}

}  // namespace nnet
