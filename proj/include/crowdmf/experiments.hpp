#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "crowdmf/graph.hpp"

namespace crowdmf {

// Exit codes shared by the library entry points and the CLI.
inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;

// Check tolerances. Defaults are the documented contract; every run echoes
// the values it used into its output metadata.
struct Tolerances {
  double tv_product_form = 1e-10;
  double detailed_balance = 1e-12;
  double routing_detailed_balance = 1e-14;
  double stationary_residual = 1e-10;
};

// One JSON document per run; CLI flags override individual keys.
struct ExperimentConfig {
  std::string experiment;  // verify | fluid | convergence | concentration | bifurcation | critical

  std::string graph_type = "complete";  // complete | cycle | path | edge_list
  int graph_size = 3;
  std::string edge_list_path;

  double s = 2.0;
  std::int64_t population = 6;                  // N
  std::vector<std::int64_t> population_list;    // N_list
  double horizon = 10.0;                        // T
  double dt = 1e-3;
  double epsilon = 0.1;
  std::uint64_t seed = 42;
  int num_seeds = 20;
  std::vector<double> y0;  // empty = uniform
  bool snap_y0 = true;

  double burn_in = -1.0;  // < 0 selects the 10*N default
  double sample_interval = 1.0;
  std::int64_t num_samples = 100000;

  double s_min = 2.0;
  double s_max = 3.5;
  double s_step = 0.01;

  std::string out_dir = "out";
  Tolerances tol;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

CityGraph build_graph(const ExperimentConfig& cfg);

// Experiment bodies. They write their output files and return kExitPass or
// kExitCheckFailed; invalid configs and capacity overruns throw.
int run_verify(const ExperimentConfig& cfg);
int run_fluid(const ExperimentConfig& cfg);
int run_convergence(const ExperimentConfig& cfg);
int run_concentration(const ExperimentConfig& cfg);
int run_bifurcation(const ExperimentConfig& cfg);
int run_critical(const ExperimentConfig& cfg);

// Dispatch on cfg.experiment with error-to-exit-code mapping (0 pass,
// 1 tolerance failure, 2 config/capacity error).
int run_experiment(const ExperimentConfig& cfg);

}  // namespace crowdmf
