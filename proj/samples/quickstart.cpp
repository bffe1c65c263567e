// Loads an edge list and compares the estimators on one vertex pair.
//   quickstart graph.tsv [u v]

#include <cstdlib>
#include <iostream>

#include "usimrank/usimrank.hpp"

int main(int argc, char** argv) {
  using namespace usimrank;
  if (argc != 2 && argc != 4) {
    std::cerr << "usage: quickstart graph.tsv [u v]\n";
    return 2;
  }
  const auto g = load_edge_list(argv[1]);
  const Vertex u = argc == 4 ? static_cast<Vertex>(std::atoi(argv[2])) : 0;
  const Vertex v = argc == 4 ? static_cast<Vertex>(std::atoi(argv[3])) : 0;
  const int n = 5;
  const double c = 0.6;

  Rng rng(42);
  const auto plan = SamplePlan::from_accuracy(0.1, 0.1);
  for (const auto& e : {simrank_baseline(g, u, v, n, c), simrank_sampling(g, u, v, n, c, plan, rng),
                        simrank_two_stage(g, u, v, n, c, plan, 1, rng),
                        simrank_speedup(g, u, v, n, c, plan, 1, rng)})
    std::cout << to_string(e.method) << "\t" << e.value << "\tbound " << e.bound.value_or(0.0) << '\n';
}
