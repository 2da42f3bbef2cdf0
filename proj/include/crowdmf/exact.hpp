#pragma once

#include <cstdint>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "crowdmf/graph.hpp"

namespace crowdmf {

// All compositions of N over I squares, ordered ascending-lexicographically
// by (n_0, ..., n_{I-1}): index 0 is (0,...,0,N), the last is (N,0,...,0).
// The index is stable and reproducible across runs.
struct StateSpace {
  std::int64_t population = 0;
  int num_squares = 0;
  std::vector<std::vector<std::int32_t>> states;

  std::size_t size() const { return states.size(); }
  std::size_t index_of(const std::vector<std::int32_t>& state) const;

 private:
  friend StateSpace enumerate_states(std::int64_t, int, std::size_t);
  std::unordered_map<std::uint64_t, std::size_t> index_;
  static std::uint64_t key(const std::vector<std::int32_t>& state);
};

inline constexpr std::size_t kMaxStates = 500000;
inline constexpr int kMaxSquaresExact = 64;

// Throws capacity_error naming the state count when C(N+I-1, I-1) exceeds
// max_states, and for I > 64 (exact analysis is combinatorial anyway).
StateSpace enumerate_states(std::int64_t population, int num_squares,
                            std::size_t max_states = kMaxStates);

struct Transition {
  std::uint32_t from;
  std::uint32_t to;
  double rate;
};

// Off-diagonal rates of the population CTMC; diagonal is the negated exit
// rate. Every transition moves exactly one person (-e_i + e_j).
struct SparseGenerator {
  std::size_t num_states = 0;
  std::vector<Transition> transitions;
  std::vector<double> exit_rate;
};

// Rates n_i * (1-c)^(n_i - 1) * Q_ij for each occupied square i and each
// neighbor j.
SparseGenerator build_generator(const StateSpace& space, double c,
                                const RoutingMatrix& q);

struct SolveOptions {
  // Dense LU up to this many states, power iteration on the uniformized
  // chain beyond it.
  std::size_t dense_limit = 4096;
  double tolerance = 1e-12;
  std::size_t max_iterations = 5000000;
};

// Unique probability vector with pi G = 0. Residual above 1e-10 is an error.
std::vector<double> stationary_global_balance(const SparseGenerator& gen,
                                              const SolveOptions& opts = {});

// Product-form stationary law: P(n) proportional to prod_i f_i(n_i) with
//   f_i(n) = theta_i^n / (n! * prod_{m=1}^n (1-c)^(m-1)).
// Evaluated in log space and normalized by log-sum-exp.
std::vector<double> product_form_stationary(const StateSpace& space,
                                            const std::vector<double>& theta,
                                            double c);

double tv_distance(const std::vector<double>& p, const std::vector<double>& q);

// max |pi(n) q(n,n') - pi(n') q(n',n)| over transition pairs, divided by the
// largest flow magnitude encountered.
double check_detailed_balance(const std::vector<double>& dist,
                              const SparseGenerator& gen);

// ||pi G||_inf, the global-balance residual.
double global_balance_residual(const std::vector<double>& dist,
                               const SparseGenerator& gen);

// Probability mass re-indexed from states n to simplex points n/N.
struct SimplexDistribution {
  std::vector<std::vector<double>> points;
  std::vector<double> mass;
};

SimplexDistribution occupancy_pushforward(const StateSpace& space,
                                          const std::vector<double>& dist);

// Total mass within l-inf distance epsilon of some member of point_set.
double concentration_mass(const SimplexDistribution& dist,
                          const std::vector<std::vector<double>>& point_set,
                          double epsilon);

// Mass-weighted mean l-inf distance to the nearest member of point_set.
double mean_distance_to_set(const SimplexDistribution& dist,
                            const std::vector<std::vector<double>>& point_set);

// Smallest distance value whose cumulative mass reaches q (weighted
// inverse-CDF quantile).
double distance_quantile(const SimplexDistribution& dist,
                         const std::vector<std::vector<double>>& point_set,
                         double q);

// CSV export: columns `state` (dash-separated counts), `probability`.
void write_distribution_csv(std::ostream& os, const StateSpace& space,
                            const std::vector<double>& dist);

// CSV export: triplets `from,to,rate`.
void write_generator_csv(std::ostream& os, const SparseGenerator& gen);

}  // namespace crowdmf
