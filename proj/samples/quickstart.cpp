// Reads a PHYLIP matrix, runs neighbor-net, fits split weights and prints
// the network as Nexus.
#include <fstream>
#include <iostream>
#include <sstream>

#include "nnet/nnet.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: quickstart <matrix.phy>\n";
    return 1;
  }
  std::ifstream in(argv[1]);
  std::stringstream text;
  text << in.rdbuf();
  try {
    auto m = nnet::read_phylip_distances<double>(text.str());
    auto res = nnet::run_neighbor_net(m.d, nnet::WeightingScheme::balanced_tsp());
    std::cerr << "ordering:";
    for (auto x : res.ordering.order()) std::cerr << ' ' << m.labels[x];
    std::cerr << "\ntour length: " << nnet::tour_length(m.d, res.ordering) << '\n';

    auto fit = nnet::nnls_fit(m.d, res.ordering);
    nnet::WeightedSplitSystem<double> positive(m.d.size());
    for (const auto& e : fit.system)
      if (e.weight > 0) positive.add(e.split, e.weight);
    std::cout << nnet::write_nexus(nnet::make_nexus(m.labels, res.ordering, positive));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
