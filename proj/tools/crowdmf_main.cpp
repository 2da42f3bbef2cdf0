#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <string>

#include "crowdmf/experiments.hpp"
#include "crowdmf/version.hpp"

namespace {

struct CliOverrides {
  std::string config_path;
  std::string out_dir;
  std::string graph_type;
  std::string edge_list_path;
  int graph_size = 0;
  double s = 0.0;
  std::int64_t population = 0;
  std::vector<std::int64_t> population_list;
  double horizon = 0.0;
  double dt = 0.0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  int num_seeds = 0;
  std::vector<double> y0;
  bool no_snap = false;
  double burn_in = 0.0;
  double sample_interval = 0.0;
  std::int64_t num_samples = 0;
  double s_min = 0.0, s_max = 0.0, s_step = 0.0;
};

// Shared flags per subcommand; only flags the user actually passed override
// the config file.
void add_common_options(CLI::App* cmd, CliOverrides& o) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--seed", o.seed, "base RNG seed");
  cmd->add_option("--graph", o.graph_type, "graph type: complete|cycle|path|edge_list");
  cmd->add_option("--size", o.graph_size, "number of squares I");
  cmd->add_option("--edges", o.edge_list_path, "edge-list file for --graph edge_list");
  cmd->add_option("--s", o.s, "chat intensity s");
  cmd->add_option("--N", o.population, "population N");
  cmd->add_option("--N-list", o.population_list, "population list")->delimiter(',');
  cmd->add_option("--T", o.horizon, "time horizon");
  cmd->add_option("--dt", o.dt, "integration step");
  cmd->add_option("--epsilon", o.epsilon, "concentration radius");
  cmd->add_option("--num-seeds", o.num_seeds, "independent runs per N");
  cmd->add_option("--y0", o.y0, "initial occupancy vector")->delimiter(',');
  cmd->add_flag("--no-snap", o.no_snap, "reject y0 off the N-lattice instead of rounding");
  cmd->add_option("--burn-in", o.burn_in, "sampling burn-in time");
  cmd->add_option("--sample-interval", o.sample_interval, "sampling interval");
  cmd->add_option("--num-samples", o.num_samples, "number of stationary samples");
  cmd->add_option("--s-min", o.s_min, "sweep start");
  cmd->add_option("--s-max", o.s_max, "sweep end");
  cmd->add_option("--s-step", o.s_step, "sweep step");
}

int apply_and_run(const std::string& experiment, const CLI::App* cmd,
                  const CliOverrides& o) {
  nlohmann::json j;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) {
      std::cerr << "config error: cannot open " << o.config_path << '\n';
      return crowdmf::kExitConfigError;
    }
    try {
      in >> j;
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return crowdmf::kExitConfigError;
    }
  }

  crowdmf::ExperimentConfig cfg;
  try {
    cfg = crowdmf::config_from_json(j);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return crowdmf::kExitConfigError;
  }
  cfg.experiment = experiment;

  auto passed = [&](const std::string& name) { return cmd->count(name) > 0; };
  if (passed("--out")) cfg.out_dir = o.out_dir;
  if (passed("--seed")) cfg.seed = o.seed;
  if (passed("--graph")) cfg.graph_type = o.graph_type;
  if (passed("--size")) cfg.graph_size = o.graph_size;
  if (passed("--edges")) {
    cfg.edge_list_path = o.edge_list_path;
    cfg.graph_type = "edge_list";
  }
  if (passed("--s")) cfg.s = o.s;
  if (passed("--N")) cfg.population = o.population;
  if (passed("--N-list")) cfg.population_list = o.population_list;
  if (passed("--T")) cfg.horizon = o.horizon;
  if (passed("--dt")) cfg.dt = o.dt;
  if (passed("--epsilon")) cfg.epsilon = o.epsilon;
  if (passed("--num-seeds")) cfg.num_seeds = o.num_seeds;
  if (passed("--y0")) cfg.y0 = o.y0;
  if (passed("--no-snap")) cfg.snap_y0 = false;
  if (passed("--burn-in")) cfg.burn_in = o.burn_in;
  if (passed("--sample-interval")) cfg.sample_interval = o.sample_interval;
  if (passed("--num-samples")) cfg.num_samples = o.num_samples;
  if (passed("--s-min")) cfg.s_min = o.s_min;
  if (passed("--s-max")) cfg.s_max = o.s_max;
  if (passed("--s-step")) cfg.s_step = o.s_step;

  return crowdmf::run_experiment(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crowdmf: exact, fluid-limit and simulation analysis of the "
               "crowd model on city squares"};
  app.set_version_flag("--version", crowdmf::kArtifactVersion);
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> experiments = {
      {"verify", "exact stationary analysis and reversibility checks"},
      {"fluid", "integrate the fluid-limit trajectory"},
      {"convergence", "sup-deviation of simulated paths from the fluid limit"},
      {"concentration", "stationary mass near the fluid stationary points"},
      {"bifurcation", "stationary-point count over an s sweep"},
      {"critical", "critical intensity s* for a regular graph"},
  };

  std::vector<CliOverrides> overrides(experiments.size());
  std::vector<CLI::App*> cmds;
  for (std::size_t k = 0; k < experiments.size(); ++k) {
    CLI::App* cmd = app.add_subcommand(experiments[k].first, experiments[k].second);
    add_common_options(cmd, overrides[k]);
    cmds.push_back(cmd);
  }

  CLI11_PARSE(app, argc, argv);

  for (std::size_t k = 0; k < experiments.size(); ++k) {
    if (cmds[k]->parsed()) {
      return apply_and_run(experiments[k].first, cmds[k], overrides[k]);
    }
  }
  return crowdmf::kExitConfigError;
}
