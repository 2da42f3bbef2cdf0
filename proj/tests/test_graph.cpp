#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "crowdmf/graph.hpp"
#include "test_util.hpp"

using namespace crowdmf;

TEST_CASE("complete graph constructors and degrees") {
  CityGraph k3 = complete_graph(3);
  CHECK(k3.num_squares == 3);
  for (int i = 0; i < 3; ++i) CHECK(k3.degree(i) == 2);
  CHECK(k3.is_regular());

  CityGraph k2 = complete_graph(2);
  CHECK(k2.degree(0) == 1);
  CHECK(k2.degree(1) == 1);

  CHECK_THROWS_AS(complete_graph(1), std::invalid_argument);
}

TEST_CASE("cycle and path graphs") {
  CityGraph c5 = cycle_graph(5);
  for (int i = 0; i < 5; ++i) CHECK(c5.degree(i) == 2);
  CHECK(c5.is_regular());

  CityGraph p3 = path_graph(3);
  CHECK(p3.degree(0) == 1);
  CHECK(p3.degree(1) == 2);
  CHECK(p3.degree(2) == 1);
  CHECK_FALSE(p3.is_regular());
}

TEST_CASE("routing matrix entries") {
  RoutingMatrix q3 = routing_matrix(complete_graph(3));
  for (int i = 0; i < 3; ++i) {
    CHECK(q3(i, i) == 0.0);
    for (int j = 0; j < 3; ++j) {
      if (i != j) CHECK(q3(i, j) == doctest::Approx(0.5).epsilon(1e-15));
    }
  }

  RoutingMatrix q2 = routing_matrix(complete_graph(2));
  CHECK(q2(0, 1) == 1.0);
  CHECK(q2(1, 0) == 1.0);
  CHECK(q2(0, 0) == 0.0);

  RoutingMatrix qp = routing_matrix(path_graph(3));
  CHECK(qp(1, 0) == doctest::Approx(0.5));
  CHECK(qp(1, 2) == doctest::Approx(0.5));
  CHECK(qp(0, 1) == 1.0);
  CHECK(qp(2, 1) == 1.0);
}

TEST_CASE("routing stationary closed form") {
  auto th3 = routing_stationary(complete_graph(3));
  for (double v : th3) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));

  auto thp = routing_stationary(path_graph(3));
  CHECK(thp[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(thp[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(thp[2] == doctest::Approx(0.25).epsilon(1e-15));

  auto th2 = routing_stationary(complete_graph(2));
  CHECK(th2[0] == doctest::Approx(0.5));
  CHECK(th2[1] == doctest::Approx(0.5));
}

TEST_CASE("random connected graphs: rows, fixed point, detailed balance") {
  SplitMix64 rng(20240601);
  for (int trial = 0; trial < 100; ++trial) {
    int size = 2 + static_cast<int>(rng.next() % 19);  // up to 20
    CityGraph g = testutil::random_connected_graph(rng, size);
    RoutingMatrix q = routing_matrix(g);
    std::vector<double> theta = routing_stationary(g);

    double theta_sum = 0.0;
    for (int i = 0; i < size; ++i) {
      double row = 0.0;
      for (int j = 0; j < size; ++j) row += q(i, j);
      CHECK(std::abs(row - 1.0) <= 1e-12);
      CHECK(theta[i] > 0.0);
      theta_sum += theta[i];
    }
    CHECK(std::abs(theta_sum - 1.0) <= 1e-12);

    // left fixed point of Q
    for (int j = 0; j < size; ++j) {
      double acc = 0.0;
      for (int i = 0; i < size; ++i) acc += theta[i] * q(i, j);
      CHECK(std::abs(acc - theta[j]) <= 1e-12);
    }

    CHECK(check_routing_detailed_balance(q, theta) <= 1e-14);

    // independent eigen-solve oracle
    auto oracle = testutil::routing_stationary_eigen_oracle(q);
    for (int i = 0; i < size; ++i) CHECK(std::abs(theta[i] - oracle[i]) <= 1e-10);
  }
}

TEST_CASE("detailed balance violation is reported") {
  RoutingMatrix q2 = routing_matrix(complete_graph(2));
  double v = check_routing_detailed_balance(q2, {0.9, 0.1});
  CHECK(v == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("service rate") {
  for (double c : {0.0, 0.3, 0.99}) CHECK(service_rate(1, c) == 1.0);
  CHECK(service_rate(3, 0.1) == doctest::Approx(0.81).epsilon(1e-15));
  CHECK(service_rate(2, 0.0) == 1.0);
  CHECK_THROWS_AS(service_rate(0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(service_rate(2, 1.0), std::invalid_argument);

  // nonincreasing in n
  for (double c : {0.01, 0.2, 0.7}) {
    double prev = 2.0;
    for (int n = 1; n <= 30; ++n) {
      double mu = service_rate(n, c);
      CHECK(mu <= prev + 1e-15);
      CHECK(mu > 0.0);
      CHECK(mu <= 1.0);
      prev = mu;
    }
  }
}

TEST_CASE("model params") {
  ModelParams p(10, 2.0);
  CHECK(p.chat_probability() == doctest::Approx(0.2).epsilon(1e-15));
  CHECK_THROWS_AS(ModelParams(10, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(ModelParams(10, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(ModelParams(0, 0.0), std::invalid_argument);
}

TEST_CASE("edge list file round trip") {
  std::string path = "test_edges_tmp.txt";
  {
    std::ofstream os(path);
    os << "# a triangle plus a tail\n";
    os << "0 1\n1 2\n2 0\n2 3\n";
  }
  CityGraph g = load_edge_list(path);
  CHECK(g.num_squares == 4);
  CHECK(g.degree(2) == 3);
  CHECK(g.degree(3) == 1);
  std::remove(path.c_str());

  {
    std::ofstream os(path);
    os << "0 1\n2 3\n";  // disconnected
  }
  CHECK_THROWS_AS(load_edge_list(path), std::invalid_argument);
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_edge_list("no_such_file.txt"), std::invalid_argument);
}

TEST_CASE("graph validation") {
  CHECK_THROWS_AS(graph_from_edges(3, {{0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(graph_from_edges(3, {{0, 1}}), std::invalid_argument);  // square 2 isolated
  CHECK_THROWS_AS(graph_from_edges(2, {{0, 5}}), std::invalid_argument);
}
