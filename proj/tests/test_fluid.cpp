#include <doctest.h>

#include <cmath>

#include "crowdmf/errors.hpp"
#include "crowdmf/exact.hpp"
#include "crowdmf/fluid.hpp"
#include "crowdmf/graph.hpp"
#include "test_util.hpp"

using namespace crowdmf;

namespace {

double linf(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST_CASE("limit drift") {
  RoutingMatrix q3 = routing_matrix(complete_graph(3));

  SUBCASE("uniform point balances a regular graph") {
    std::vector<double> v = drift_limit({1.0 / 3, 1.0 / 3, 1.0 / 3}, 2.0, q3);
    for (double x : v) CHECK(std::abs(x) <= 1e-15);
  }

  SUBCASE("s = 0 reduces to the linear routing flow") {
    std::vector<double> y{0.6, 0.3, 0.1};
    std::vector<double> v = drift_limit(y, 0.0, q3);
    for (int i = 0; i < 3; ++i) {
      double expect = -y[i];
      for (int j = 0; j < 3; ++j) expect += y[j] * q3(j, i);
      CHECK(v[i] == doctest::Approx(expect).epsilon(1e-14));
    }
  }

  SUBCASE("single occupied square on K2") {
    RoutingMatrix q2 = routing_matrix(complete_graph(2));
    std::vector<double> v = drift_limit({1.0, 0.0}, 1.0, q2);
    CHECK(v[0] == doctest::Approx(-std::exp(-1.0)).epsilon(1e-14));
    CHECK(v[1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  }

  SUBCASE("components sum to zero at random points") {
    SplitMix64 rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
      auto y = testutil::random_simplex_point(rng, 3);
      auto v = drift_limit(y, 3.0, q3);
      double sum = 0.0;
      for (double x : v) sum += x;
      CHECK(std::abs(sum) <= 1e-14);
    }
  }
}

TEST_CASE("pre-limit drift") {
  RoutingMatrix q3 = routing_matrix(complete_graph(3));
  RoutingMatrix q2 = routing_matrix(complete_graph(2));

  SUBCASE("off-lattice points are rejected") {
    CHECK_THROWS_AS(drift_finite({0.5, 0.25, 0.25}, 3, 1.0, q3), std::invalid_argument);
  }

  SUBCASE("single walker on K2") {
    std::vector<double> v = drift_finite({1.0, 0.0}, 1, 0.5, q2);
    CHECK(v[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(v[1] == doctest::Approx(1.0).epsilon(1e-14));
  }

  SUBCASE("uniform lattice point on K3 balances") {
    std::vector<double> v = drift_finite({1.0 / 3, 1.0 / 3, 1.0 / 3}, 30, 2.0, q3);
    for (double x : v) CHECK(std::abs(x) <= 1e-14);
  }

  SUBCASE("s = 0 gives unit service rates") {
    std::vector<double> y{0.6, 0.4, 0.0};
    auto v0 = drift_finite(y, 5, 0.0, q3);
    auto vlim = drift_limit(y, 0.0, q3);
    CHECK(linf(v0, vlim) <= 1e-14);
  }

  SUBCASE("components sum to zero on the lattice") {
    StateSpace space = enumerate_states(12, 3);
    for (const auto& st : space.states) {
      std::vector<double> y{st[0] / 12.0, st[1] / 12.0, st[2] / 12.0};
      auto v = drift_finite(y, 12, 2.0, q3);
      double sum = 0.0;
      for (double x : v) sum += x;
      CHECK(std::abs(sum) <= 1e-12);
    }
  }
}

TEST_CASE("flow integration") {
  RoutingMatrix q3 = routing_matrix(complete_graph(3));

  SUBCASE("stationary start stays put") {
    std::vector<double> uniform{1.0 / 3, 1.0 / 3, 1.0 / 3};
    Trajectory traj = integrate_flow(uniform, 2.0, q3, 5.0);
    for (const auto& p : traj.points) CHECK(linf(p, uniform) <= 1e-10);
  }

  SUBCASE("semi-flow property") {
    std::vector<double> y0{0.7, 0.2, 0.1};
    auto direct = flow_endpoint(y0, 2.0, q3, 2.0);
    auto first = flow_endpoint(y0, 2.0, q3, 1.0);
    auto composed = flow_endpoint(first, 2.0, q3, 1.0);
    CHECK(linf(direct, composed) <= 1e-8);
  }

  SUBCASE("mass conservation along the path") {
    Trajectory traj = integrate_flow({0.9, 0.05, 0.05}, 4.0, q3, 10.0);
    for (const auto& p : traj.points) {
      double sum = 0.0;
      for (double x : p) {
        CHECK(x >= 0.0);
        sum += x;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-10);
    }
    CHECK(traj.times.front() == 0.0);
    CHECK(traj.times.back() == doctest::Approx(10.0));
  }

  SUBCASE("argument validation") {
    std::vector<double> uniform{1.0 / 3, 1.0 / 3, 1.0 / 3};
    FlowOptions big_dt;
    big_dt.dt = 0.1;
    CHECK_THROWS_AS(integrate_flow(uniform, 2.0, q3, 5.0, big_dt), std::invalid_argument);
    FlowOptions over_horizon;
    over_horizon.dt = 0.01;
    CHECK_THROWS_AS(integrate_flow(uniform, 2.0, q3, 0.005, over_horizon),
                    std::invalid_argument);
    CHECK_THROWS_AS(integrate_flow({0.5, 0.2, 0.2}, 2.0, q3, 1.0), std::invalid_argument);
  }

  SUBCASE("fractional final step lands on the horizon") {
    Trajectory traj = integrate_flow({0.5, 0.3, 0.2}, 1.0, q3, 0.0105);
    CHECK(traj.times.back() == doctest::Approx(0.0105).epsilon(1e-12));
  }
}

TEST_CASE("drift gap bound") {
  CHECK(drift_gap_bound(100, 0.0) == 0.0);
  CHECK(drift_gap_bound(1000, 2.0) == doctest::Approx(0.002).epsilon(1e-12));

  double prev = drift_gap_bound(100, 2.0);
  for (std::int64_t n : {1000, 10000, 100000}) {
    double next = drift_gap_bound(n, 2.0);
    CHECK(next < prev);
    prev = next;
  }
  CHECK_THROWS_AS(drift_gap_bound(3, 5.0), std::invalid_argument);
}

TEST_CASE("convergence conditions on the full lattice") {
  RoutingMatrix q3 = routing_matrix(complete_graph(3));
  StateSpace space = enumerate_states(30, 3);
  std::vector<std::vector<double>> grid;
  for (const auto& st : space.states) {
    grid.push_back({st[0] / 30.0, st[1] / 30.0, st[2] / 30.0});
  }
  REQUIRE(grid.size() == 496);
  for (double s : {1.0, 2.0, 5.0}) {
    KurtzReport report = kurtz_conditions_report(30, s, q3, grid);
    CAPTURE(s);
    CHECK(report.sup_drift_gap <= report.drift_gap_bound);
    CHECK(report.max_jump_norm_rate <= report.jump_norm_bound);
    CHECK(report.large_jump_term == 0.0);
    CHECK(report.grid_points == 496);
  }
}

TEST_CASE("lambert w0") {
  CHECK(lambert_w0(0.0) == 0.0);
  CHECK(lambert_w0(-0.36787944117144233) == -1.0);
  CHECK_THROWS_AS(lambert_w0(-0.369), std::invalid_argument);

  // functional identity over the working range
  for (int k = 0; k <= 1000; ++k) {
    double x = -1.0 + 11.0 * k / 1000.0;
    double t = x * std::exp(x);
    double w = lambert_w0(t);
    double tol = x < -0.999 ? 1e-8 : 1e-12;
    CAPTURE(x);
    CHECK(std::abs(w - x) <= tol);
  }
  // residual form |w e^w - x|
  for (double x : {-0.35, -0.1, 0.5, 1.0, 2.0, 10.0, 1e4}) {
    double w = lambert_w0(x);
    CHECK(std::abs(w * std::exp(w) - x) <= 1e-12 * std::max(1.0, std::abs(x)));
  }
}

TEST_CASE("phi alpha") {
  CHECK(phi_alpha(1.0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(phi_alpha(0.5), std::invalid_argument);

  for (double alpha : {1.5, 2.0, 3.0, 5.0}) {
    double b = phi_alpha(alpha);
    CHECK(b > 0.0);
    CHECK(b <= 1.0);
    CHECK(std::abs(b * std::exp(-b) - alpha * std::exp(-alpha)) <= 1e-12);
  }

  double prev = phi_alpha(1.0 + 1e-6);
  for (double alpha = 1.1; alpha <= 10.0; alpha += 0.1) {
    double b = phi_alpha(alpha);
    CHECK(b < prev);
    prev = b;
  }
}

TEST_CASE("critical intensity") {
  CriticalResult r3 = critical_s(3);
  CHECK(std::abs(r3.s_star - 2.7456) <= 1e-3);
  // sharper pin from the scalar minimization itself
  CHECK(r3.s_star == doctest::Approx(2.7456435767).epsilon(1e-6));
  CHECK(r3.k == 2);
  CHECK(r3.alpha == doctest::Approx(1.6056534868).epsilon(1e-4));
  CHECK_FALSE(r3.alpha_at_boundary);

  CriticalResult r2 = critical_s(2);
  CHECK(r2.s_star == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(r2.alpha_at_boundary);

  // continuity boundary: objective at alpha -> 1+ equals I for every K
  for (int i : {2, 3, 5, 8}) {
    for (int k = 1; k < i; ++k) {
      double value = (i - k) * (1.0 + 1e-12) + k * phi_alpha(1.0 + 1e-12);
      CHECK(value == doctest::Approx(static_cast<double>(i)).epsilon(1e-9));
    }
  }

  CHECK_THROWS_AS(critical_s(1), std::invalid_argument);
}

TEST_CASE("stationary points below and above threshold") {
  RoutingMatrix q3 = routing_matrix(complete_graph(3));

  SUBCASE("below: only the uniform point") {
    StationaryPointSet set = find_stationary_points(2.0, q3);
    REQUIRE(set.points.size() == 1);
    CHECK(linf(set.points[0], {1.0 / 3, 1.0 / 3, 1.0 / 3}) <= 1e-10);
    CHECK(set.residuals[0] <= 1e-10);
  }

  SUBCASE("above: crowd points appear") {
    StationaryPointSet set = find_stationary_points(5.0, q3);
    CHECK(set.points.size() == 7);
    for (double r : set.residuals) CHECK(r <= 1e-10);
    // known coordinates from the two-value reduction at s=5
    bool found_high = false, found_pair = false;
    for (const auto& p : set.points) {
      if (linf(p, {0.985161, 0.007419, 0.007419}) < 1e-4) found_high = true;
      if (linf(p, {0.469585, 0.469585, 0.060829}) < 1e-4) found_pair = true;
    }
    CHECK(found_high);
    CHECK(found_pair);
  }

  SUBCASE("uniform is always a member on regular graphs") {
    RoutingMatrix qc = routing_matrix(cycle_graph(5));
    for (double s : {0.0, 1.0, 4.0, 9.0}) {
      StationaryPointSet set = find_stationary_points(s, qc);
      bool has_uniform = false;
      for (const auto& p : set.points) {
        if (linf(p, {0.2, 0.2, 0.2, 0.2, 0.2}) <= 1e-9) has_uniform = true;
      }
      CAPTURE(s);
      CHECK(has_uniform);
    }
  }

  SUBCASE("two squares above threshold") {
    RoutingMatrix q2 = routing_matrix(complete_graph(2));
    StationaryPointSet set = find_stationary_points(3.0, q2);
    CHECK(set.points.size() == 3);
    for (double r : set.residuals) CHECK(r <= 1e-10);
  }

  SUBCASE("non-regular graph via the Newton path") {
    RoutingMatrix qp = routing_matrix(path_graph(3));
    StationaryPointSet set = find_stationary_points(1.0, qp);
    CHECK_FALSE(set.maybe_incomplete);
    REQUIRE(!set.points.empty());
    for (double r : set.residuals) CHECK(r <= 1e-10);
    // the flow should settle onto a member from a nearby start
    auto end = flow_endpoint({0.4, 0.4, 0.2}, 1.0, qp, 60.0);
    double best = 1.0;
    for (const auto& p : set.points) best = std::min(best, linf(end, p));
    CHECK(best <= 1e-6);
  }
}

TEST_CASE("flow stays on found stationary points") {
  RoutingMatrix q3 = routing_matrix(complete_graph(3));
  StationaryPointSet set = find_stationary_points(5.0, q3);
  REQUIRE(set.points.size() == 7);
  for (const auto& p : set.points) {
    Trajectory traj = integrate_flow(p, 5.0, q3, 50.0);
    double worst = 0.0;
    for (const auto& pt : traj.points) worst = std::max(worst, linf(pt, p));
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("bifurcation bracket contains the critical value for I=2") {
  RoutingMatrix q2 = routing_matrix(complete_graph(2));
  double s_star = critical_s(2).s_star;
  double lo = -1.0, hi = -1.0;
  std::size_t prev = 1;
  for (double s = 1.8; s <= 2.2 + 1e-9; s += 0.01) {
    std::size_t count = regular_stationary_points(s, q2).points.size();
    if (prev == 1 && count > 1 && lo < 0.0) {
      lo = s - 0.01;
      hi = s;
    }
    prev = count;
  }
  REQUIRE(lo > 0.0);
  CHECK(lo <= s_star);
  CHECK(s_star <= hi);
}

TEST_CASE("semi-flow law at random points") {
  RoutingMatrix q3 = routing_matrix(complete_graph(3));
  SplitMix64 rng(31337);
  for (int trial = 0; trial < 20; ++trial) {
    auto y0 = testutil::random_simplex_point(rng, 3);
    double t1 = 5.0 * rng.uniform01() + 1e-3;
    double t2 = 5.0 * rng.uniform01() + 1e-3;
    auto direct = flow_endpoint(y0, 2.0, q3, t1 + t2);
    auto composed = flow_endpoint(flow_endpoint(y0, 2.0, q3, t1), 2.0, q3, t2);
    CHECK(linf(direct, composed) <= 1e-8);
  }
}
