#include "crowdmf/experiments.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "crowdmf/csv.hpp"
#include "crowdmf/errors.hpp"
#include "crowdmf/exact.hpp"
#include "crowdmf/fluid.hpp"
#include "crowdmf/rng.hpp"
#include "crowdmf/sim.hpp"
#include "crowdmf/version.hpp"

namespace crowdmf {

using nlohmann::json;

namespace {

std::ofstream open_output(const ExperimentConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  std::filesystem::path path = std::filesystem::path(cfg.out_dir) / name;
  std::ofstream os(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!os) throw std::runtime_error("cannot open output file: " + path.string());
  return os;
}

std::string echo(const ExperimentConfig& cfg) { return config_to_json(cfg).dump(); }

std::vector<double> uniform_point(int dim) {
  return std::vector<double>(dim, 1.0 / dim);
}

std::vector<std::int64_t> population_list(const ExperimentConfig& cfg,
                                          std::vector<std::int64_t> fallback) {
  if (!cfg.population_list.empty()) return cfg.population_list;
  return fallback;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.experiment = j.value("experiment", cfg.experiment);
  if (j.contains("graph")) {
    const json& g = j.at("graph");
    cfg.graph_type = g.value("type", cfg.graph_type);
    cfg.graph_size = g.value("size", cfg.graph_size);
    cfg.edge_list_path = g.value("path", cfg.edge_list_path);
  }
  cfg.s = j.value("s", cfg.s);
  cfg.population = j.value("N", cfg.population);
  if (j.contains("N_list")) cfg.population_list = j.at("N_list").get<std::vector<std::int64_t>>();
  cfg.horizon = j.value("T", cfg.horizon);
  cfg.dt = j.value("dt", cfg.dt);
  cfg.epsilon = j.value("epsilon", cfg.epsilon);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.num_seeds = j.value("num_seeds", cfg.num_seeds);
  if (j.contains("y0")) cfg.y0 = j.at("y0").get<std::vector<double>>();
  cfg.snap_y0 = j.value("snap_y0", cfg.snap_y0);
  cfg.burn_in = j.value("burn_in", cfg.burn_in);
  cfg.sample_interval = j.value("sample_interval", cfg.sample_interval);
  cfg.num_samples = j.value("num_samples", cfg.num_samples);
  cfg.s_min = j.value("s_min", cfg.s_min);
  cfg.s_max = j.value("s_max", cfg.s_max);
  cfg.s_step = j.value("s_step", cfg.s_step);
  cfg.out_dir = j.value("out", cfg.out_dir);
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    cfg.tol.tv_product_form = t.value("tv_product_form", cfg.tol.tv_product_form);
    cfg.tol.detailed_balance = t.value("detailed_balance", cfg.tol.detailed_balance);
    cfg.tol.routing_detailed_balance =
        t.value("routing_detailed_balance", cfg.tol.routing_detailed_balance);
    cfg.tol.stationary_residual = t.value("stationary_residual", cfg.tol.stationary_residual);
  }
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = cfg.experiment;
  j["graph"] = {{"type", cfg.graph_type}, {"size", cfg.graph_size}};
  if (!cfg.edge_list_path.empty()) j["graph"]["path"] = cfg.edge_list_path;
  j["s"] = cfg.s;
  j["N"] = cfg.population;
  if (!cfg.population_list.empty()) j["N_list"] = cfg.population_list;
  j["T"] = cfg.horizon;
  j["dt"] = cfg.dt;
  j["epsilon"] = cfg.epsilon;
  j["seed"] = cfg.seed;
  j["num_seeds"] = cfg.num_seeds;
  if (!cfg.y0.empty()) j["y0"] = cfg.y0;
  j["snap_y0"] = cfg.snap_y0;
  j["burn_in"] = cfg.burn_in;
  j["sample_interval"] = cfg.sample_interval;
  j["num_samples"] = cfg.num_samples;
  j["s_min"] = cfg.s_min;
  j["s_max"] = cfg.s_max;
  j["s_step"] = cfg.s_step;
  j["out"] = cfg.out_dir;
  j["tolerances"] = {{"tv_product_form", cfg.tol.tv_product_form},
                     {"detailed_balance", cfg.tol.detailed_balance},
                     {"routing_detailed_balance", cfg.tol.routing_detailed_balance},
                     {"stationary_residual", cfg.tol.stationary_residual}};
  return j;
}

CityGraph build_graph(const ExperimentConfig& cfg) {
  if (cfg.graph_type == "complete") return complete_graph(cfg.graph_size);
  if (cfg.graph_type == "cycle") return cycle_graph(cfg.graph_size);
  if (cfg.graph_type == "path") return path_graph(cfg.graph_size);
  if (cfg.graph_type == "edge_list") return load_edge_list(cfg.edge_list_path);
  throw std::invalid_argument("unknown graph type: " + cfg.graph_type);
}

int run_verify(const ExperimentConfig& cfg) {
  CityGraph g = build_graph(cfg);
  RoutingMatrix q = routing_matrix(g);
  std::vector<double> theta = routing_stationary(g);
  ModelParams params(cfg.population, cfg.s);
  double c = params.chat_probability();

  StateSpace space = enumerate_states(cfg.population, g.num_squares);
  SparseGenerator gen = build_generator(space, c, q);
  std::vector<double> oracle = stationary_global_balance(gen);
  std::vector<double> product = product_form_stationary(space, theta, c);

  double tv = tv_distance(product, oracle);
  double db = check_detailed_balance(oracle, gen);
  double routing_db = check_routing_detailed_balance(q, theta);

  SimplexDistribution lattice = occupancy_pushforward(space, oracle);
  KurtzReport kurtz = kurtz_conditions_report(cfg.population, cfg.s, q, lattice.points);

  bool pass = tv <= cfg.tol.tv_product_form && db <= cfg.tol.detailed_balance &&
              routing_db <= cfg.tol.routing_detailed_balance &&
              kurtz.sup_drift_gap <= kurtz.drift_gap_bound &&
              kurtz.max_jump_norm_rate <= kurtz.jump_norm_bound &&
              kurtz.large_jump_term == 0.0;

  json report;
  report["meta"] = {{"artifact_version", kArtifactVersion},
                    {"experiment", "verify"},
                    {"rng", kRngName},
                    {"seed", cfg.seed},
                    {"config", config_to_json(cfg)}};
  report["checks"] = {
      {"product_form_vs_global_balance_tv",
       {{"value", tv}, {"tolerance", cfg.tol.tv_product_form}, {"pass", tv <= cfg.tol.tv_product_form}}},
      {"detailed_balance_violation",
       {{"value", db}, {"tolerance", cfg.tol.detailed_balance}, {"pass", db <= cfg.tol.detailed_balance}}},
      {"routing_detailed_balance_violation",
       {{"value", routing_db},
        {"tolerance", cfg.tol.routing_detailed_balance},
        {"pass", routing_db <= cfg.tol.routing_detailed_balance}}},
      {"kurtz_conditions",
       {{"sup_drift_gap", kurtz.sup_drift_gap},
        {"drift_gap_bound", kurtz.drift_gap_bound},
        {"max_jump_norm_rate", kurtz.max_jump_norm_rate},
        {"jump_norm_bound", kurtz.jump_norm_bound},
        {"large_jump_term", kurtz.large_jump_term},
        {"grid_points", kurtz.grid_points},
        {"pass", kurtz.sup_drift_gap <= kurtz.drift_gap_bound &&
                     kurtz.max_jump_norm_rate <= kurtz.jump_norm_bound &&
                     kurtz.large_jump_term == 0.0}}}};
  report["pass"] = pass;

  {
    auto os = open_output(cfg, "verify_report.json");
    os << report.dump(2) << '\n';
  }
  {
    auto os = open_output(cfg, "stationary_distribution.csv");
    write_metadata_block(os, "verify", echo(cfg), cfg.seed);
    write_distribution_csv(os, space, oracle);
  }
  {
    auto os = open_output(cfg, "generator.csv");
    write_metadata_block(os, "verify", echo(cfg), cfg.seed);
    write_generator_csv(os, gen);
  }

  std::cout << "verify: tv=" << fmt_double(tv) << " detailed_balance=" << fmt_double(db)
            << " routing_db=" << fmt_double(routing_db)
            << " kurtz_gap=" << fmt_double(kurtz.sup_drift_gap) << "/"
            << fmt_double(kurtz.drift_gap_bound) << " -> "
            << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? kExitPass : kExitCheckFailed;
}

int run_fluid(const ExperimentConfig& cfg) {
  CityGraph g = build_graph(cfg);
  RoutingMatrix q = routing_matrix(g);
  std::vector<double> y0 = cfg.y0.empty() ? uniform_point(g.num_squares) : cfg.y0;
  FlowOptions opts;
  opts.dt = cfg.dt;
  Trajectory traj = integrate_flow(y0, cfg.s, q, cfg.horizon, opts);

  auto os = open_output(cfg, "fluid_trajectory.csv");
  write_metadata_block(os, "fluid", echo(cfg), cfg.seed);
  std::vector<std::string> header{"t"};
  for (int i = 0; i < g.num_squares; ++i) header.push_back("y_" + std::to_string(i));
  write_csv_row(os, header);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    std::vector<std::string> row{fmt_double(traj.times[k])};
    for (double v : traj.points[k]) row.push_back(fmt_double(v));
    write_csv_row(os, row);
  }
  std::cout << "fluid: wrote " << traj.times.size() << " points" << '\n';
  return kExitPass;
}

int run_convergence(const ExperimentConfig& cfg) {
  CityGraph g = build_graph(cfg);
  RoutingMatrix q = routing_matrix(g);
  std::vector<double> y0 = cfg.y0.empty() ? uniform_point(g.num_squares) : cfg.y0;
  std::vector<std::int64_t> populations = population_list(cfg, {100, 400});
  FlowOptions opts;
  opts.dt = cfg.dt;
  auto rows = convergence_experiment(populations, cfg.s, q, y0, cfg.horizon,
                                     cfg.num_seeds, cfg.seed, opts, cfg.snap_y0);

  auto os = open_output(cfg, "convergence.csv");
  write_metadata_block(os, "convergence", echo(cfg), cfg.seed);
  write_csv_row(os, {"N", "median_dev", "q25", "q75"});
  for (const auto& row : rows) {
    write_csv_row(os, {fmt_int(row.population), fmt_double(row.median_dev),
                       fmt_double(row.q25), fmt_double(row.q75)});
    std::cout << "convergence N=" << row.population << ": median=" << fmt_double(row.median_dev)
              << '\n';
  }
  return kExitPass;
}

int run_concentration(const ExperimentConfig& cfg) {
  CityGraph g = build_graph(cfg);
  RoutingMatrix q = routing_matrix(g);
  std::vector<double> theta = routing_stationary(g);
  StationaryPointSet points = find_stationary_points(cfg.s, q);
  if (points.points.empty()) {
    throw numerical_error("no stationary points found; cannot measure concentration");
  }
  std::vector<std::int64_t> populations = population_list(cfg, {15, 30, 60, 120});
  std::sort(populations.begin(), populations.end());

  auto os = open_output(cfg, "concentration.csv");
  write_metadata_block(os, "concentration", echo(cfg), cfg.seed);
  write_csv_row(os, {"N", "epsilon", "mass_near_S", "mean_dist", "dist_q25", "dist_median",
                     "dist_q75"});
  for (std::int64_t n : populations) {
    ModelParams params(n, cfg.s);
    StateSpace space = enumerate_states(n, g.num_squares);
    std::vector<double> dist =
        product_form_stationary(space, theta, params.chat_probability());
    SimplexDistribution push = occupancy_pushforward(space, dist);
    double mass = concentration_mass(push, points.points, cfg.epsilon);
    double mean_dist = mean_distance_to_set(push, points.points);
    write_csv_row(os, {fmt_int(n), fmt_double(cfg.epsilon), fmt_double(mass),
                       fmt_double(mean_dist),
                       fmt_double(distance_quantile(push, points.points, 0.25)),
                       fmt_double(distance_quantile(push, points.points, 0.5)),
                       fmt_double(distance_quantile(push, points.points, 0.75))});
    std::cout << "concentration N=" << n << ": mass_near_S=" << fmt_double(mass)
              << " mean_dist=" << fmt_double(mean_dist) << '\n';
  }
  return kExitPass;
}

int run_bifurcation(const ExperimentConfig& cfg) {
  CityGraph g = build_graph(cfg);
  RoutingMatrix q = routing_matrix(g);
  if (!g.is_regular()) {
    throw std::invalid_argument("bifurcation sweep needs a regular graph");
  }
  if (cfg.s_step <= 0.0 || cfg.s_max < cfg.s_min) {
    throw std::invalid_argument("bad sweep range");
  }

  struct Row {
    double s;
    std::size_t count;
    std::string points_json;
  };
  std::vector<Row> rows;
  double bracket_lo = -1.0, bracket_hi = -1.0;
  std::size_t steps = static_cast<std::size_t>((cfg.s_max - cfg.s_min) / cfg.s_step + 1e-9);
  for (std::size_t k = 0; k <= steps; ++k) {
    double s = cfg.s_min + static_cast<double>(k) * cfg.s_step;
    StationaryPointSet set = regular_stationary_points(s, q);
    std::string pts = "[";
    for (std::size_t p = 0; p < set.points.size(); ++p) {
      if (p) pts += ',';
      pts += '[';
      for (std::size_t i = 0; i < set.points[p].size(); ++i) {
        if (i) pts += ',';
        pts += fmt_double(set.points[p][i]);
      }
      pts += ']';
    }
    pts += ']';
    rows.push_back({s, set.points.size(), pts});
    if (rows.size() > 1 && bracket_lo < 0.0 && rows[rows.size() - 2].count == 1 &&
        set.points.size() > 1) {
      bracket_lo = rows[rows.size() - 2].s;
      bracket_hi = s;
    }
  }

  auto os = open_output(cfg, "bifurcation.csv");
  write_metadata_block(os, "bifurcation", echo(cfg), cfg.seed);
  if (bracket_lo >= 0.0) {
    os << "# transition_bracket: [" << fmt_double(bracket_lo) << ", "
       << fmt_double(bracket_hi) << "]\n";
  }
  write_csv_row(os, {"s", "num_points", "points_json"});
  for (const auto& row : rows) {
    write_csv_row(os, {fmt_double(row.s), fmt_int(static_cast<std::int64_t>(row.count)),
                       '"' + row.points_json + '"'});
  }
  if (bracket_lo >= 0.0) {
    std::cout << "bifurcation: count first exceeds 1 in [" << fmt_double(bracket_lo) << ", "
              << fmt_double(bracket_hi) << "]" << '\n';
  } else {
    std::cout << "bifurcation: no transition inside the sweep range" << '\n';
  }
  return kExitPass;
}

int run_critical(const ExperimentConfig& cfg) {
  CriticalResult result = critical_s(cfg.graph_size);
  auto os = open_output(cfg, "critical.csv");
  write_metadata_block(os, "critical", echo(cfg), cfg.seed);
  write_csv_row(os, {"I", "s_star", "K", "alpha", "alpha_at_boundary"});
  write_csv_row(os, {fmt_int(cfg.graph_size), fmt_double(result.s_star), fmt_int(result.k),
                     fmt_double(result.alpha), result.alpha_at_boundary ? "1" : "0"});
  std::cout << "critical I=" << cfg.graph_size << ": s*=" << fmt_double(result.s_star)
            << " argmin K=" << result.k << " alpha=" << fmt_double(result.alpha)
            << (result.alpha_at_boundary ? " (boundary)" : "") << '\n';
  return kExitPass;
}

int run_experiment(const ExperimentConfig& cfg) {
  try {
    if (cfg.experiment == "verify") return run_verify(cfg);
    if (cfg.experiment == "fluid") return run_fluid(cfg);
    if (cfg.experiment == "convergence") return run_convergence(cfg);
    if (cfg.experiment == "concentration") return run_concentration(cfg);
    if (cfg.experiment == "bifurcation") return run_bifurcation(cfg);
    if (cfg.experiment == "critical") return run_critical(cfg);
    std::cerr << "unknown experiment: " << cfg.experiment << '\n';
    return kExitConfigError;
  } catch (const capacity_error& e) {
    std::cerr << "capacity error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitConfigError;
  }
}

}  // namespace crowdmf
