#pragma once

#include <Eigen/Dense>

#include <utility>
#include <vector>

#include "crowdmf/graph.hpp"
#include "crowdmf/rng.hpp"

namespace crowdmf::testutil {

// Random connected graph: random recursive tree plus extra edges with
// probability 0.3. Deterministic given the generator state.
inline CityGraph random_connected_graph(SplitMix64& rng, int num_squares) {
  std::vector<std::pair<int, int>> edges;
  for (int v = 1; v < num_squares; ++v) {
    int parent = static_cast<int>(rng.next() % static_cast<std::uint64_t>(v));
    edges.emplace_back(parent, v);
  }
  for (int i = 0; i < num_squares; ++i) {
    for (int j = i + 1; j < num_squares; ++j) {
      if (rng.uniform01() < 0.3) edges.emplace_back(i, j);
    }
  }
  return graph_from_edges(num_squares, edges);
}

// Independent oracle for the routing stationary vector: dense solve of
// theta Q = theta with the normalization constraint replacing one equation.
inline std::vector<double> routing_stationary_eigen_oracle(const RoutingMatrix& q) {
  const int n = q.size;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = q(j, i) - (i == j ? 1.0 : 0.0);
  }
  for (int j = 0; j < n; ++j) a(n - 1, j) = 1.0;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  Eigen::VectorXd x = a.partialPivLu().solve(b);
  return {x.data(), x.data() + n};
}

// Uniform point on the simplex via exponential spacings.
inline std::vector<double> random_simplex_point(SplitMix64& rng, int dim) {
  std::vector<double> y(dim);
  double sum = 0.0;
  for (int i = 0; i < dim; ++i) {
    double u = rng.uniform01();
    y[i] = -std::log(1.0 - u) + 1e-300;
    sum += y[i];
  }
  for (double& v : y) v /= sum;
  return y;
}

}  // namespace crowdmf::testutil
