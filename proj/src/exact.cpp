#include "crowdmf/exact.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "crowdmf/csv.hpp"
#include "crowdmf/errors.hpp"

namespace crowdmf {

namespace {

// C(n+i-1, i-1) as a double; exact for every count that can pass the cap.
double composition_count(std::int64_t n, int i) {
  double count = 1.0;
  for (int k = 1; k < i; ++k) {
    count *= static_cast<double>(n + k) / k;
  }
  return count;
}

std::string fmt_count(double count) {
  if (count < 9e15) return fmt_int(llround(count));
  return fmt_double(count);
}

}  // namespace

std::uint64_t StateSpace::key(const std::vector<std::int32_t>& state) {
  // FNV-1a over the raw counts
  std::uint64_t h = 1469598103934665603ULL;
  for (std::int32_t v : state) {
    std::uint64_t x = static_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) {
      h ^= (x >> (8 * b)) & 0xff;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

std::size_t StateSpace::index_of(const std::vector<std::int32_t>& state) const {
  auto it = index_.find(key(state));
  if (it == index_.end() || states[it->second] != state) {
    // hash collision or genuinely unknown state: fall back to linear probe
    for (std::size_t k = 0; k < states.size(); ++k) {
      if (states[k] == state) return k;
    }
    throw std::invalid_argument("state not in enumeration");
  }
  return it->second;
}

StateSpace enumerate_states(std::int64_t population, int num_squares,
                            std::size_t max_states) {
  if (population < 1) throw std::invalid_argument("population must be positive");
  if (num_squares < 1) throw std::invalid_argument("need at least one square");
  if (num_squares > kMaxSquaresExact) {
    throw capacity_error("exact analysis supports at most " +
                         std::to_string(kMaxSquaresExact) + " squares, got " +
                         std::to_string(num_squares));
  }
  double count = composition_count(population, num_squares);
  if (count > static_cast<double>(max_states)) {
    throw capacity_error("state count " + fmt_count(count) + " exceeds the cap of " +
                         std::to_string(max_states) + " (N=" + std::to_string(population) +
                         ", I=" + std::to_string(num_squares) + ")");
  }

  StateSpace space;
  space.population = population;
  space.num_squares = num_squares;
  space.states.reserve(static_cast<std::size_t>(count));

  // Ascending lexicographic successor: move one unit from the tail slot to
  // its left neighbor while the tail is nonempty; otherwise collapse the
  // rightmost nonzero interior slot into the tail and carry one left.
  std::vector<std::int32_t> state(num_squares, 0);
  state[num_squares - 1] = static_cast<std::int32_t>(population);
  for (;;) {
    space.states.push_back(state);
    if (num_squares == 1) break;
    std::int32_t tail = state[num_squares - 1];
    if (tail > 0) {
      state[num_squares - 2] += 1;
      state[num_squares - 1] -= 1;
    } else {
      int k = num_squares - 2;
      while (k >= 0 && state[k] == 0) --k;
      if (k <= 0) break;  // (N,0,...,0) reached
      std::int32_t carry = state[k];
      state[k] = 0;
      state[k - 1] += 1;
      state[num_squares - 1] = carry - 1;
    }
  }

  space.index_.reserve(space.states.size() * 2);
  for (std::size_t k = 0; k < space.states.size(); ++k) {
    space.index_.emplace(StateSpace::key(space.states[k]), k);
  }
  return space;
}

SparseGenerator build_generator(const StateSpace& space, double c,
                                const RoutingMatrix& q) {
  if (q.size != space.num_squares) {
    throw std::invalid_argument("routing matrix size does not match state space");
  }
  SparseGenerator gen;
  gen.num_states = space.size();
  gen.exit_rate.assign(gen.num_states, 0.0);
  const int dim = space.num_squares;

  std::vector<std::int32_t> target;
  for (std::size_t k = 0; k < space.size(); ++k) {
    const auto& state = space.states[k];
    for (int i = 0; i < dim; ++i) {
      if (state[i] == 0) continue;
      double depart = state[i] * service_rate(state[i], c);
      for (int j = 0; j < dim; ++j) {
        double pij = q(i, j);
        if (pij <= 0.0) continue;
        target = state;
        target[i] -= 1;
        target[j] += 1;
        std::size_t to = space.index_of(target);
        double rate = depart * pij;
        gen.transitions.push_back({static_cast<std::uint32_t>(k),
                                   static_cast<std::uint32_t>(to), rate});
        gen.exit_rate[k] += rate;
      }
    }
  }
  return gen;
}

std::vector<double> stationary_global_balance(const SparseGenerator& gen,
                                              const SolveOptions& opts) {
  const std::size_t m = gen.num_states;
  if (m == 0) throw std::invalid_argument("empty generator");
  std::vector<double> pi;

  if (m <= opts.dense_limit) {
    // pi G = 0  <=>  G^T pi^T = 0; swap the last balance equation for the
    // normalization constraint.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t k = 0; k < m; ++k) a(k, k) = -gen.exit_rate[k];
    for (const auto& t : gen.transitions) a(t.to, t.from) += t.rate;
    for (std::size_t k = 0; k < m; ++k) a(m - 1, k) = 1.0;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    b(m - 1) = 1.0;
    Eigen::VectorXd x = a.partialPivLu().solve(b);
    pi.assign(x.data(), x.data() + m);
  } else {
    // power iteration on the uniformized chain P = I + G / Lambda
    double max_exit = *std::max_element(gen.exit_rate.begin(), gen.exit_rate.end());
    if (max_exit <= 0.0) throw numerical_error("generator has no transitions");
    double lambda = 1.05 * max_exit;
    pi.assign(m, 1.0 / static_cast<double>(m));
    std::vector<double> flow(m, 0.0);
    std::size_t it = 0;
    double residual = std::numeric_limits<double>::infinity();
    for (; it < opts.max_iterations; ++it) {
      std::fill(flow.begin(), flow.end(), 0.0);
      for (const auto& t : gen.transitions) flow[t.to] += pi[t.from] * t.rate;
      residual = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        double g = flow[k] - pi[k] * gen.exit_rate[k];  // (pi G)_k
        residual = std::max(residual, std::abs(g));
        pi[k] += g / lambda;
      }
      double sum = std::accumulate(pi.begin(), pi.end(), 0.0);
      for (double& v : pi) v /= sum;
      if (residual <= opts.tolerance) break;
    }
    if (residual > opts.tolerance) {
      throw numerical_error("power iteration stalled at residual " + fmt_double(residual) +
                            " after " + std::to_string(it) + " iterations");
    }
  }

  double min_entry = *std::min_element(pi.begin(), pi.end());
  if (min_entry < -1e-12) {
    throw numerical_error("stationary solve produced negative probability " +
                          fmt_double(min_entry));
  }
  for (double& v : pi) v = std::max(v, 0.0);
  double sum = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (double& v : pi) v /= sum;

  double residual = global_balance_residual(pi, gen);
  if (residual > 1e-10) {
    throw numerical_error("global-balance residual " + fmt_double(residual) +
                          " exceeds 1e-10 (non-irreducible input?)");
  }
  return pi;
}

std::vector<double> product_form_stationary(const StateSpace& space,
                                            const std::vector<double>& theta,
                                            double c) {
  if (static_cast<int>(theta.size()) != space.num_squares) {
    throw std::invalid_argument("theta dimension does not match state space");
  }
  if (c < 0.0 || c >= 1.0) throw std::invalid_argument("chat probability must lie in [0,1)");
  const double log_one_minus_c = std::log1p(-c);

  // log f_i(n) = n log theta_i - log n! - n(n-1)/2 * log(1-c)
  std::vector<double> log_theta(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (theta[i] <= 0.0) throw std::invalid_argument("theta must be strictly positive");
    log_theta[i] = std::log(theta[i]);
  }

  std::vector<double> logp(space.size());
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < space.size(); ++k) {
    const auto& state = space.states[k];
    double lp = 0.0;
    for (int i = 0; i < space.num_squares; ++i) {
      std::int64_t n = state[i];
      if (n == 0) continue;
      double nn = static_cast<double>(n);
      lp += nn * log_theta[i] - std::lgamma(nn + 1.0) -
            0.5 * nn * (nn - 1.0) * log_one_minus_c;
    }
    logp[k] = lp;
    max_log = std::max(max_log, lp);
  }

  std::vector<double> p(space.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < space.size(); ++k) {
    p[k] = std::exp(logp[k] - max_log);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("tv_distance: size mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) acc += std::abs(p[k] - q[k]);
  return 0.5 * acc;
}

double check_detailed_balance(const std::vector<double>& dist,
                              const SparseGenerator& gen) {
  if (dist.size() != gen.num_states) {
    throw std::invalid_argument("distribution not aligned with generator");
  }
  std::unordered_map<std::uint64_t, double> rate_of;
  rate_of.reserve(gen.transitions.size() * 2);
  for (const auto& t : gen.transitions) {
    rate_of[(static_cast<std::uint64_t>(t.from) << 32) | t.to] = t.rate;
  }
  double worst = 0.0;
  double scale = 0.0;
  for (const auto& t : gen.transitions) {
    double forward = dist[t.from] * t.rate;
    auto rev = rate_of.find((static_cast<std::uint64_t>(t.to) << 32) | t.from);
    double backward = rev == rate_of.end() ? 0.0 : dist[t.to] * rev->second;
    worst = std::max(worst, std::abs(forward - backward));
    scale = std::max({scale, forward, backward});
  }
  return scale > 0.0 ? worst / scale : 0.0;
}

double global_balance_residual(const std::vector<double>& dist,
                               const SparseGenerator& gen) {
  std::vector<double> flow(gen.num_states, 0.0);
  for (const auto& t : gen.transitions) flow[t.to] += dist[t.from] * t.rate;
  double residual = 0.0;
  for (std::size_t k = 0; k < gen.num_states; ++k) {
    residual = std::max(residual, std::abs(flow[k] - dist[k] * gen.exit_rate[k]));
  }
  return residual;
}

SimplexDistribution occupancy_pushforward(const StateSpace& space,
                                          const std::vector<double>& dist) {
  if (dist.size() != space.size()) {
    throw std::invalid_argument("distribution not aligned with state space");
  }
  SimplexDistribution out;
  out.points.reserve(space.size());
  double n = static_cast<double>(space.population);
  for (const auto& state : space.states) {
    std::vector<double> y(state.size());
    for (std::size_t i = 0; i < state.size(); ++i) y[i] = state[i] / n;
    out.points.push_back(std::move(y));
  }
  out.mass = dist;
  return out;
}

namespace {

double linf_to_set(const std::vector<double>& y,
                   const std::vector<std::vector<double>>& point_set) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : point_set) {
    double d = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) d = std::max(d, std::abs(y[i] - p[i]));
    best = std::min(best, d);
  }
  return best;
}

}  // namespace

double concentration_mass(const SimplexDistribution& dist,
                          const std::vector<std::vector<double>>& point_set,
                          double epsilon) {
  if (point_set.empty()) throw std::invalid_argument("concentration_mass: empty point set");
  if (epsilon <= 0.0) throw std::invalid_argument("concentration_mass: epsilon must be positive");
  double mass = 0.0;
  for (std::size_t k = 0; k < dist.points.size(); ++k) {
    if (linf_to_set(dist.points[k], point_set) <= epsilon) mass += dist.mass[k];
  }
  return mass;
}

double mean_distance_to_set(const SimplexDistribution& dist,
                            const std::vector<std::vector<double>>& point_set) {
  if (point_set.empty()) throw std::invalid_argument("mean_distance_to_set: empty point set");
  double acc = 0.0;
  for (std::size_t k = 0; k < dist.points.size(); ++k) {
    acc += dist.mass[k] * linf_to_set(dist.points[k], point_set);
  }
  return acc;
}

double distance_quantile(const SimplexDistribution& dist,
                         const std::vector<std::vector<double>>& point_set,
                         double q) {
  if (point_set.empty()) throw std::invalid_argument("distance_quantile: empty point set");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile level must lie in [0,1]");
  std::vector<std::pair<double, double>> dm;  // (distance, mass)
  dm.reserve(dist.points.size());
  for (std::size_t k = 0; k < dist.points.size(); ++k) {
    dm.emplace_back(linf_to_set(dist.points[k], point_set), dist.mass[k]);
  }
  std::sort(dm.begin(), dm.end());
  double cum = 0.0;
  for (const auto& [d, m] : dm) {
    cum += m;
    if (cum >= q) return d;
  }
  return dm.empty() ? 0.0 : dm.back().first;
}

void write_distribution_csv(std::ostream& os, const StateSpace& space,
                            const std::vector<double>& dist) {
  write_csv_row(os, {"state", "probability"});
  for (std::size_t k = 0; k < space.size(); ++k) {
    std::string state;
    for (std::size_t i = 0; i < space.states[k].size(); ++i) {
      if (i) state += '-';
      state += std::to_string(space.states[k][i]);
    }
    write_csv_row(os, {state, fmt_double(dist[k])});
  }
}

void write_generator_csv(std::ostream& os, const SparseGenerator& gen) {
  write_csv_row(os, {"from", "to", "rate"});
  for (const auto& t : gen.transitions) {
    write_csv_row(os, {fmt_int(t.from), fmt_int(t.to), fmt_double(t.rate)});
  }
}

}  // namespace crowdmf
