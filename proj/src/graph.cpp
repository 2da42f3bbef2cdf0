#include "crowdmf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace crowdmf {

namespace {

void validate(const CityGraph& g) {
  if (g.num_squares < 2) {
    throw std::invalid_argument("city graph needs at least 2 squares");
  }
  for (int i = 0; i < g.num_squares; ++i) {
    if (g.neighbors[i].empty()) {
      throw std::invalid_argument("square " + std::to_string(i) + " has no neighbors");
    }
    for (int j : g.neighbors[i]) {
      if (j == i) throw std::invalid_argument("self-loop at square " + std::to_string(i));
      if (j < 0 || j >= g.num_squares) {
        throw std::invalid_argument("neighbor index out of range");
      }
      if (!std::binary_search(g.neighbors[j].begin(), g.neighbors[j].end(), i)) {
        throw std::invalid_argument("adjacency not symmetric");
      }
    }
  }
  // connectivity (BFS from 0)
  std::vector<char> seen(g.num_squares, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w : g.neighbors[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  if (reached != g.num_squares) {
    throw std::invalid_argument("city graph is not connected");
  }
}

}  // namespace

bool CityGraph::adjacent(int i, int j) const {
  return std::binary_search(neighbors[i].begin(), neighbors[i].end(), j);
}

bool CityGraph::is_regular() const {
  for (int i = 1; i < num_squares; ++i) {
    if (degree(i) != degree(0)) return false;
  }
  return true;
}

std::int64_t CityGraph::degree_sum() const {
  std::int64_t sum = 0;
  for (int i = 0; i < num_squares; ++i) sum += degree(i);
  return sum;
}

CityGraph complete_graph(int num_squares) {
  if (num_squares < 2) {
    throw std::invalid_argument("complete_graph: need at least 2 squares");
  }
  CityGraph g;
  g.num_squares = num_squares;
  g.neighbors.resize(num_squares);
  for (int i = 0; i < num_squares; ++i) {
    for (int j = 0; j < num_squares; ++j) {
      if (j != i) g.neighbors[i].push_back(j);
    }
  }
  return g;
}

CityGraph cycle_graph(int num_squares) {
  if (num_squares < 3) {
    throw std::invalid_argument("cycle_graph: need at least 3 squares");
  }
  CityGraph g;
  g.num_squares = num_squares;
  g.neighbors.resize(num_squares);
  for (int i = 0; i < num_squares; ++i) {
    int prev = (i + num_squares - 1) % num_squares;
    int next = (i + 1) % num_squares;
    g.neighbors[i] = {std::min(prev, next), std::max(prev, next)};
  }
  return g;
}

CityGraph path_graph(int num_squares) {
  if (num_squares < 2) {
    throw std::invalid_argument("path_graph: need at least 2 squares");
  }
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < num_squares; ++i) edges.emplace_back(i, i + 1);
  return graph_from_edges(num_squares, edges);
}

CityGraph graph_from_edges(int num_squares,
                           const std::vector<std::pair<int, int>>& edges) {
  if (num_squares < 2) {
    throw std::invalid_argument("graph_from_edges: need at least 2 squares");
  }
  std::vector<std::set<int>> adj(num_squares);
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= num_squares || b >= num_squares) {
      throw std::invalid_argument("edge index out of range");
    }
    if (a == b) throw std::invalid_argument("self-loop at square " + std::to_string(a));
    adj[a].insert(b);
    adj[b].insert(a);
  }
  CityGraph g;
  g.num_squares = num_squares;
  g.neighbors.resize(num_squares);
  for (int i = 0; i < num_squares; ++i) {
    g.neighbors[i].assign(adj[i].begin(), adj[i].end());
  }
  validate(g);
  return g;
}

CityGraph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open edge list: " + path);
  std::vector<std::pair<int, int>> edges;
  int max_index = -1;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int a, b;
    if (!(ls >> a >> b)) {
      throw std::invalid_argument("bad edge-list line: '" + line + "'");
    }
    edges.emplace_back(a, b);
    max_index = std::max({max_index, a, b});
  }
  if (edges.empty()) throw std::invalid_argument("edge list is empty: " + path);
  return graph_from_edges(max_index + 1, edges);
}

RoutingMatrix routing_matrix(const CityGraph& g) {
  RoutingMatrix q;
  q.size = g.num_squares;
  q.entries.assign(static_cast<std::size_t>(q.size) * q.size, 0.0);
  for (int i = 0; i < g.num_squares; ++i) {
    double p = 1.0 / g.degree(i);
    for (int j : g.neighbors[i]) q.at(i, j) = p;
  }
  return q;
}

std::vector<double> routing_stationary(const CityGraph& g) {
  double total = static_cast<double>(g.degree_sum());
  std::vector<double> theta(g.num_squares);
  for (int i = 0; i < g.num_squares; ++i) {
    theta[i] = g.degree(i) / total;
  }
  return theta;
}

double check_routing_detailed_balance(const RoutingMatrix& q,
                                      const std::vector<double>& theta) {
  if (static_cast<int>(theta.size()) != q.size) {
    throw std::invalid_argument("theta dimension does not match routing matrix");
  }
  double worst = 0.0;
  for (int i = 0; i < q.size; ++i) {
    for (int j = i + 1; j < q.size; ++j) {
      worst = std::max(worst, std::abs(theta[i] * q(i, j) - theta[j] * q(j, i)));
    }
  }
  return worst;
}

ModelParams::ModelParams(std::int64_t n, double s) : population(n), intensity(s) {
  if (n < 1) throw std::invalid_argument("population must be positive");
  if (s < 0.0) throw std::invalid_argument("intensity must be nonnegative");
  if (s >= static_cast<double>(n)) {
    throw std::invalid_argument("intensity s must satisfy s < N so that c = s/N < 1");
  }
}

double service_rate(std::int64_t n, double c) {
  if (n < 1) throw std::invalid_argument("service_rate: square must hold someone");
  if (c < 0.0 || c >= 1.0) throw std::invalid_argument("chat probability must lie in [0,1)");
  return std::pow(1.0 - c, static_cast<double>(n - 1));
}

}  // namespace crowdmf
