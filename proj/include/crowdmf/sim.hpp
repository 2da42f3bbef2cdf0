#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "crowdmf/fluid.hpp"
#include "crowdmf/graph.hpp"

namespace crowdmf {

struct RunConfig {
  std::int64_t population = 1;
  double intensity = 0.0;  // s, must stay below population
  double horizon = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::int32_t> initial_state;
};

// Jump chain of one simulation run. times[0] = 0 holds the initial state;
// each later entry is one person moving between squares. The last state
// persists up to `horizon` (the first jump beyond it was discarded).
struct SimulationTrace {
  std::int64_t population = 0;
  int num_squares = 0;
  double horizon = 0.0;
  std::vector<double> times;
  std::vector<std::vector<std::int32_t>> states;
};

// Exact event-by-event simulation. Per event, two splitmix64 uniforms are
// consumed in a documented order: u1 gives the holding time
// -log(1-u1)/R(n), u2 selects the (origin, destination) pair by inverse CDF
// over the row-major flattened rate vector n_i mu(n_i) Q_ij. Identical
// RunConfig implies a bit-identical trace.
SimulationTrace gillespie_run(const RunConfig& cfg, const RoutingMatrix& q);

// Occupancy n(t)/N with piecewise-constant interpolation between jumps.
std::vector<double> occupancy_at(const SimulationTrace& trace, double t);

// sup over the flow's time grid of the l-inf distance between the trace
// occupancy and the flow point. The trace must cover the flow horizon.
double sup_deviation(const SimulationTrace& trace, const Trajectory& flow);

struct ConvergenceRow {
  std::int64_t population = 0;
  double median_dev = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

// Per N: num_seeds runs with seeds base_seed + run index, one flow
// integration, and deviation quartiles (linear-interpolation quantiles).
// y0 must sit on every N-lattice unless snap_to_lattice, which rounds by
// largest remainder. Rows come back sorted by N.
std::vector<ConvergenceRow> convergence_experiment(
    const std::vector<std::int64_t>& populations, double s,
    const RoutingMatrix& q, const std::vector<double>& y0, double horizon,
    int num_seeds, std::uint64_t base_seed, const FlowOptions& flow_opts = {},
    bool snap_to_lattice = false);

// Nearest lattice state to y0 (largest-remainder rounding) when snap is set;
// otherwise requires N*y0 integer within 1e-9 and errors naming N.
std::vector<std::int32_t> lattice_state_from(const std::vector<double>& y0,
                                             std::int64_t population,
                                             bool snap);

// N spread as evenly as possible over I squares; the default initial state.
std::vector<std::int32_t> balanced_state(std::int64_t population,
                                         int num_squares);

// Occupancy-point measure sampled from one long run: discard burn_in time,
// then record the state every sample_interval. States are sorted
// lexicographically; mass sums to 1.
struct EmpiricalMeasure {
  std::int64_t population = 0;
  std::vector<std::vector<std::int32_t>> states;
  std::vector<double> mass;
};

EmpiricalMeasure empirical_stationary(std::int64_t population, double s,
                                      const RoutingMatrix& q, double burn_in,
                                      double sample_interval,
                                      std::int64_t num_samples,
                                      std::uint64_t seed);

// CSV export: `t,n_0,...,n_{I-1}` per jump.
void write_trace_csv(std::ostream& os, const SimulationTrace& trace);

}  // namespace crowdmf
