#include "crowdmf/sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "crowdmf/csv.hpp"
#include "crowdmf/rng.hpp"

namespace crowdmf {

namespace {

void validate_run_config(const RunConfig& cfg, const RoutingMatrix& q) {
  if (cfg.population < 1) throw std::invalid_argument("population must be positive");
  if (cfg.intensity < 0.0 || cfg.intensity >= static_cast<double>(cfg.population)) {
    throw std::invalid_argument("intensity must satisfy 0 <= s < N");
  }
  if (cfg.horizon <= 0.0) throw std::invalid_argument("horizon must be positive");
  if (static_cast<int>(cfg.initial_state.size()) != q.size) {
    throw std::invalid_argument("initial state dimension does not match graph");
  }
  std::int64_t total = 0;
  for (std::int32_t v : cfg.initial_state) {
    if (v < 0) throw std::invalid_argument("initial state has negative count");
    total += v;
  }
  if (total != cfg.population) {
    throw std::invalid_argument("initial state sums to " + std::to_string(total) +
                                ", expected " + std::to_string(cfg.population));
  }
}

}  // namespace

SimulationTrace gillespie_run(const RunConfig& cfg, const RoutingMatrix& q) {
  validate_run_config(cfg, q);
  const int dim = q.size;
  const double c = cfg.intensity / static_cast<double>(cfg.population);

  SimulationTrace trace;
  trace.population = cfg.population;
  trace.num_squares = dim;
  trace.horizon = cfg.horizon;
  trace.times.push_back(0.0);
  trace.states.push_back(cfg.initial_state);

  SplitMix64 rng(cfg.seed);
  std::vector<std::int32_t> state = cfg.initial_state;
  std::vector<double> rates(static_cast<std::size_t>(dim) * dim);
  double t = 0.0;

  for (;;) {
    double total = 0.0;
    for (int i = 0; i < dim; ++i) {
      double depart = 0.0;
      if (state[i] > 0) depart = state[i] * service_rate(state[i], c);
      for (int j = 0; j < dim; ++j) {
        double r = depart * q(i, j);
        rates[static_cast<std::size_t>(i) * dim + j] = r;
        total += r;
      }
    }
    if (total <= 0.0) {
      // unreachable for N >= 1 since mu > 0 everywhere
      throw std::logic_error("total event rate vanished");
    }
    double u1 = rng.uniform01();
    t += -std::log1p(-u1) / total;
    if (t > cfg.horizon) break;

    double u2 = rng.uniform01();
    double target = u2 * total;
    double cum = 0.0;
    std::size_t pick = rates.size();
    for (std::size_t k = 0; k < rates.size(); ++k) {
      cum += rates[k];
      if (target < cum) {
        pick = k;
        break;
      }
    }
    if (pick == rates.size()) {
      // rounding pushed the target past the last positive entry
      for (std::size_t k = rates.size(); k-- > 0;) {
        if (rates[k] > 0.0) {
          pick = k;
          break;
        }
      }
    }
    int i = static_cast<int>(pick) / dim;
    int j = static_cast<int>(pick) % dim;
    state[i] -= 1;
    state[j] += 1;
    trace.times.push_back(t);
    trace.states.push_back(state);
  }
  return trace;
}

std::vector<double> occupancy_at(const SimulationTrace& trace, double t) {
  if (t < 0.0 || t > trace.horizon) {
    throw std::invalid_argument("time outside the simulated window");
  }
  auto it = std::upper_bound(trace.times.begin(), trace.times.end(), t);
  std::size_t idx = static_cast<std::size_t>(it - trace.times.begin());
  const auto& state = trace.states[idx - 1];
  std::vector<double> y(state.size());
  double n = static_cast<double>(trace.population);
  for (std::size_t i = 0; i < state.size(); ++i) y[i] = state[i] / n;
  return y;
}

double sup_deviation(const SimulationTrace& trace, const Trajectory& flow) {
  if (flow.times.empty()) throw std::invalid_argument("empty flow trajectory");
  if (trace.times.empty()) throw std::invalid_argument("empty trace");
  if (flow.times.back() > trace.horizon + 1e-9) {
    throw std::invalid_argument("trace horizon " + fmt_double(trace.horizon) +
                                " does not cover the flow horizon " +
                                fmt_double(flow.times.back()));
  }
  double worst = 0.0;
  std::size_t cursor = 0;
  double n = static_cast<double>(trace.population);
  for (std::size_t k = 0; k < flow.times.size(); ++k) {
    double t = flow.times[k];
    while (cursor + 1 < trace.times.size() && trace.times[cursor + 1] <= t) ++cursor;
    const auto& state = trace.states[cursor];
    const auto& point = flow.points[k];
    for (std::size_t i = 0; i < point.size(); ++i) {
      worst = std::max(worst, std::abs(state[i] / n - point[i]));
    }
  }
  return worst;
}

std::vector<std::int32_t> lattice_state_from(const std::vector<double>& y0,
                                             std::int64_t population, bool snap) {
  std::vector<std::int32_t> state(y0.size());
  if (!snap) {
    std::int64_t total = 0;
    for (std::size_t i = 0; i < y0.size(); ++i) {
      double counts = y0[i] * static_cast<double>(population);
      if (std::abs(counts - std::round(counts)) > 1e-9) {
        throw std::invalid_argument("y0 is off the lattice for N = " +
                                    std::to_string(population) + " (coordinate " +
                                    std::to_string(i) + ")");
      }
      state[i] = static_cast<std::int32_t>(std::llround(counts));
      total += state[i];
    }
    if (total != population) {
      throw std::invalid_argument("y0 counts sum to " + std::to_string(total) +
                                  " for N = " + std::to_string(population));
    }
    return state;
  }
  // largest-remainder rounding; ties resolved toward lower index
  std::int64_t assigned = 0;
  std::vector<std::pair<double, std::size_t>> remainders(y0.size());
  for (std::size_t i = 0; i < y0.size(); ++i) {
    double exact = y0[i] * static_cast<double>(population);
    double fl = std::floor(exact);
    state[i] = static_cast<std::int32_t>(fl);
    assigned += state[i];
    remainders[i] = {-(exact - fl), i};  // negate so larger remainder sorts first
  }
  std::sort(remainders.begin(), remainders.end());
  std::int64_t leftover = population - assigned;
  for (std::int64_t k = 0; k < leftover; ++k) {
    state[remainders[static_cast<std::size_t>(k) % y0.size()].second] += 1;
  }
  return state;
}

std::vector<std::int32_t> balanced_state(std::int64_t population, int num_squares) {
  std::vector<std::int32_t> state(num_squares);
  std::int64_t base = population / num_squares;
  std::int64_t extra = population % num_squares;
  for (int i = 0; i < num_squares; ++i) {
    state[i] = static_cast<std::int32_t>(base + (i < extra ? 1 : 0));
  }
  return state;
}

namespace {

// linear-interpolation quantile on a sorted sample
double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  if (sorted.size() == 1) return sorted[0];
  double h = p * (static_cast<double>(sorted.size()) - 1.0);
  std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

std::vector<ConvergenceRow> convergence_experiment(
    const std::vector<std::int64_t>& populations, double s,
    const RoutingMatrix& q, const std::vector<double>& y0, double horizon,
    int num_seeds, std::uint64_t base_seed, const FlowOptions& flow_opts,
    bool snap_to_lattice) {
  if (num_seeds < 3) throw std::invalid_argument("need at least 3 seeds");
  if (populations.empty()) throw std::invalid_argument("population list is empty");

  // lattice feasibility of every N first, so errors name the offender early
  std::vector<std::int64_t> sorted_n = populations;
  std::sort(sorted_n.begin(), sorted_n.end());
  std::vector<std::vector<std::int32_t>> initial;
  initial.reserve(sorted_n.size());
  for (std::int64_t n : sorted_n) {
    initial.push_back(lattice_state_from(y0, n, snap_to_lattice));
  }

  std::vector<ConvergenceRow> rows;
  for (std::size_t idx = 0; idx < sorted_n.size(); ++idx) {
    std::int64_t n = sorted_n[idx];
    std::vector<double> start(y0.size());
    for (std::size_t i = 0; i < y0.size(); ++i) {
      start[i] = initial[idx][i] / static_cast<double>(n);
    }
    Trajectory flow = integrate_flow(start, s, q, horizon, flow_opts);

    std::vector<double> devs(static_cast<std::size_t>(num_seeds));
    for (int run = 0; run < num_seeds; ++run) {
      RunConfig cfg;
      cfg.population = n;
      cfg.intensity = s;
      cfg.horizon = horizon;
      cfg.seed = base_seed + static_cast<std::uint64_t>(run);
      cfg.initial_state = initial[idx];
      SimulationTrace trace = gillespie_run(cfg, q);
      devs[static_cast<std::size_t>(run)] = sup_deviation(trace, flow);
    }
    std::sort(devs.begin(), devs.end());
    ConvergenceRow row;
    row.population = n;
    row.median_dev = quantile_sorted(devs, 0.5);
    row.q25 = quantile_sorted(devs, 0.25);
    row.q75 = quantile_sorted(devs, 0.75);
    rows.push_back(row);
  }
  return rows;
}

EmpiricalMeasure empirical_stationary(std::int64_t population, double s,
                                      const RoutingMatrix& q, double burn_in,
                                      double sample_interval,
                                      std::int64_t num_samples,
                                      std::uint64_t seed) {
  if (burn_in <= 0.0 || sample_interval <= 0.0) {
    throw std::invalid_argument("burn_in and sample_interval must be positive");
  }
  if (num_samples < 1) throw std::invalid_argument("need at least one sample");

  RunConfig cfg;
  cfg.population = population;
  cfg.intensity = s;
  cfg.horizon = burn_in + sample_interval * static_cast<double>(num_samples);
  cfg.seed = seed;
  cfg.initial_state = balanced_state(population, q.size);
  SimulationTrace trace = gillespie_run(cfg, q);

  std::map<std::vector<std::int32_t>, double> counts;
  std::size_t cursor = 0;
  for (std::int64_t k = 0; k < num_samples; ++k) {
    double t = burn_in + sample_interval * static_cast<double>(k);
    while (cursor + 1 < trace.times.size() && trace.times[cursor + 1] <= t) ++cursor;
    counts[trace.states[cursor]] += 1.0;
  }

  EmpiricalMeasure measure;
  measure.population = population;
  double total = static_cast<double>(num_samples);
  for (auto& [state, weight] : counts) {
    measure.states.push_back(state);
    measure.mass.push_back(weight / total);
  }
  return measure;
}

void write_trace_csv(std::ostream& os, const SimulationTrace& trace) {
  std::vector<std::string> header{"t"};
  for (int i = 0; i < trace.num_squares; ++i) header.push_back("n_" + std::to_string(i));
  write_csv_row(os, header);
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    std::vector<std::string> row{fmt_double(trace.times[k])};
    for (std::int32_t v : trace.states[k]) row.push_back(fmt_int(v));
    write_csv_row(os, row);
  }
}

}  // namespace crowdmf
