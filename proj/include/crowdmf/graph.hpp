#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace crowdmf {

// Undirected connected city graph. Squares are 0-based; adjacency is
// symmetric with no self-loops and every square has at least one neighbor.
struct CityGraph {
  int num_squares = 0;
  std::vector<std::vector<int>> neighbors;  // sorted adjacency lists

  int degree(int i) const { return static_cast<int>(neighbors[i].size()); }
  bool adjacent(int i, int j) const;
  bool is_regular() const;
  std::int64_t degree_sum() const;
};

CityGraph complete_graph(int num_squares);
CityGraph cycle_graph(int num_squares);
CityGraph path_graph(int num_squares);

// Builds from an explicit edge set; validates symmetry, self-loops,
// connectivity and isolated squares.
CityGraph graph_from_edges(int num_squares,
                           const std::vector<std::pair<int, int>>& edges);

// Edge-list text file, one "i j" pair per line (0-based). Blank lines and
// lines starting with '#' are skipped. Square count = max index + 1.
CityGraph load_edge_list(const std::string& path);

// Uniform next-square choice among neighbors: Q[i][j] = 1/d(i) when (i,j)
// adjacent, 0 otherwise. Rows sum to 1.
struct RoutingMatrix {
  int size = 0;
  std::vector<double> entries;  // row-major

  double operator()(int i, int j) const { return entries[static_cast<std::size_t>(i) * size + j]; }
  double& at(int i, int j) { return entries[static_cast<std::size_t>(i) * size + j]; }
};

RoutingMatrix routing_matrix(const CityGraph& g);

// Stationary vector of the routing chain, theta_i = d(i) / sum_j d(j).
std::vector<double> routing_stationary(const CityGraph& g);

// max over (i,j) of |theta_i Q_ij - theta_j Q_ji|; zero iff the routing
// chain is reversible under theta.
double check_routing_detailed_balance(const RoutingMatrix& q,
                                      const std::vector<double>& theta);

// Population N and chat intensity s; the per-person chat probability is
// c = s/N, which must stay below 1.
struct ModelParams {
  std::int64_t population = 1;
  double intensity = 0.0;

  ModelParams(std::int64_t n, double s);
  double chat_probability() const { return intensity / static_cast<double>(population); }
};

// Departure rate of one person in a square holding n people: (1-c)^(n-1).
double service_rate(std::int64_t n, double c);

}  // namespace crowdmf
