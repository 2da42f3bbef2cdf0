#include "crowdmf/fluid.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "crowdmf/csv.hpp"
#include "crowdmf/errors.hpp"

namespace crowdmf {

namespace {

constexpr double kNegInvE = -0.36787944117144233;  // -1/e

void check_simplex(const std::vector<double>& y) {
  double sum = 0.0;
  for (double v : y) {
    if (v < -1e-12) throw std::invalid_argument("simplex point has negative coordinate");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("simplex point coordinates sum to " + fmt_double(sum));
  }
}

}  // namespace

std::vector<double> drift_limit(const std::vector<double>& y, double s,
                                const RoutingMatrix& q) {
  if (static_cast<int>(y.size()) != q.size) {
    throw std::invalid_argument("drift_limit: dimension mismatch");
  }
  const int dim = q.size;
  std::vector<double> v(dim, 0.0);
  for (int i = 0; i < dim; ++i) {
    if (y[i] == 0.0) continue;
    double flow = y[i] * std::exp(-s * y[i]);
    for (int j = 0; j < dim; ++j) {
      double pij = q(i, j);
      if (pij <= 0.0) continue;
      double f = flow * pij;
      v[i] -= f;
      v[j] += f;
    }
  }
  return v;
}

std::vector<double> drift_finite(const std::vector<double>& y, std::int64_t n,
                                 double s, const RoutingMatrix& q) {
  if (static_cast<int>(y.size()) != q.size) {
    throw std::invalid_argument("drift_finite: dimension mismatch");
  }
  if (s >= static_cast<double>(n)) throw std::invalid_argument("drift_finite: need s < N");
  const int dim = q.size;
  const double nn = static_cast<double>(n);
  std::vector<double> v(dim, 0.0);
  for (int i = 0; i < dim; ++i) {
    double counts = y[i] * nn;
    if (std::abs(counts - std::round(counts)) > 1e-9) {
      throw std::invalid_argument("drift_finite: coordinate " + std::to_string(i) +
                                  " is off the N-lattice (N*y = " + fmt_double(counts) + ")");
    }
    if (std::round(counts) == 0.0) continue;
    double flow = y[i] * std::pow(1.0 - s / nn, std::round(counts) - 1.0);
    for (int j = 0; j < dim; ++j) {
      double pij = q(i, j);
      if (pij <= 0.0) continue;
      double f = flow * pij;
      v[i] -= f;
      v[j] += f;
    }
  }
  return v;
}

namespace {

// One classical RK4 step followed by simplex projection. Returns the l-inf
// size of the projection adjustment.
double rk4_step(std::vector<double>& y, double s, const RoutingMatrix& q, double h) {
  const std::size_t dim = y.size();
  std::vector<double> k1 = drift_limit(y, s, q);
  std::vector<double> tmp(dim);
  for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
  std::vector<double> k2 = drift_limit(tmp, s, q);
  for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
  std::vector<double> k3 = drift_limit(tmp, s, q);
  for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * k3[i];
  std::vector<double> k4 = drift_limit(tmp, s, q);
  for (std::size_t i = 0; i < dim; ++i) {
    y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  // clamp-and-rescale back onto the simplex
  double adjustment = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    if (y[i] < 0.0) {
      adjustment = std::max(adjustment, -y[i]);
      y[i] = 0.0;
    }
    sum += y[i];
  }
  adjustment = std::max(adjustment, std::abs(sum - 1.0));
  for (std::size_t i = 0; i < dim; ++i) y[i] /= sum;
  return adjustment;
}

}  // namespace

Trajectory integrate_flow(const std::vector<double>& y0, double s,
                          const RoutingMatrix& q, double horizon,
                          const FlowOptions& opts) {
  check_simplex(y0);
  if (horizon <= 0.0) throw std::invalid_argument("integrate_flow: horizon must be positive");
  if (opts.dt <= 0.0 || opts.dt > 0.01) {
    throw std::invalid_argument("integrate_flow: dt must lie in (0, 0.01]");
  }
  if (opts.dt > horizon) throw std::invalid_argument("integrate_flow: dt exceeds horizon");

  Trajectory traj;
  std::vector<double> y = y0;
  for (double& v : y) v = std::max(v, 0.0);
  double sum = std::accumulate(y.begin(), y.end(), 0.0);
  for (double& v : y) v /= sum;

  traj.times.push_back(0.0);
  traj.points.push_back(y);

  std::size_t full_steps = static_cast<std::size_t>(horizon / opts.dt);
  double remainder = horizon - static_cast<double>(full_steps) * opts.dt;
  for (std::size_t step = 1; step <= full_steps; ++step) {
    double adj = rk4_step(y, s, q, opts.dt);
    if (adj > opts.projection_tol) {
      throw numerical_error("integration left the simplex by " + fmt_double(adj) +
                            " in one step; use a smaller dt");
    }
    traj.times.push_back(static_cast<double>(step) * opts.dt);
    traj.points.push_back(y);
  }
  if (remainder > 1e-12 * std::max(horizon, 1.0)) {
    double adj = rk4_step(y, s, q, remainder);
    if (adj > opts.projection_tol) {
      throw numerical_error("integration left the simplex by " + fmt_double(adj) +
                            " in one step; use a smaller dt");
    }
    traj.times.push_back(horizon);
    traj.points.push_back(y);
  }
  return traj;
}

std::vector<double> flow_endpoint(const std::vector<double>& y0, double s,
                                  const RoutingMatrix& q, double horizon,
                                  const FlowOptions& opts) {
  check_simplex(y0);
  if (horizon <= 0.0) throw std::invalid_argument("flow_endpoint: horizon must be positive");
  if (opts.dt <= 0.0 || opts.dt > 0.01) {
    throw std::invalid_argument("flow_endpoint: dt must lie in (0, 0.01]");
  }
  std::vector<double> y = y0;
  for (double& v : y) v = std::max(v, 0.0);
  double sum = std::accumulate(y.begin(), y.end(), 0.0);
  for (double& v : y) v /= sum;

  std::size_t full_steps = static_cast<std::size_t>(horizon / opts.dt);
  double remainder = horizon - static_cast<double>(full_steps) * opts.dt;
  for (std::size_t step = 1; step <= full_steps; ++step) {
    double adj = rk4_step(y, s, q, opts.dt);
    if (adj > opts.projection_tol) {
      throw numerical_error("integration left the simplex by " + fmt_double(adj) +
                            " in one step; use a smaller dt");
    }
  }
  if (remainder > 1e-12 * std::max(horizon, 1.0)) {
    rk4_step(y, s, q, remainder);
  }
  return y;
}

double drift_gap_bound(std::int64_t n, double s) {
  double nn = static_cast<double>(n);
  if (s < 0.0) throw std::invalid_argument("drift_gap_bound: s must be nonnegative");
  if (s >= nn) throw std::invalid_argument("drift_gap_bound: need s < N");
  double linear = s / nn;
  double log_gap = std::abs((nn - 1.0) * std::log1p(-s / nn) + s);
  return std::max(linear, log_gap);
}

KurtzReport kurtz_conditions_report(std::int64_t n, double s,
                                    const RoutingMatrix& q,
                                    const std::vector<std::vector<double>>& grid) {
  KurtzReport report;
  report.grid_points = grid.size();
  report.drift_gap_bound = drift_gap_bound(n, s) * q.size;
  report.jump_norm_bound = static_cast<double>(q.size);
  report.large_jump_term = 0.0;  // every jump has l-inf norm exactly 1/N

  const double nn = static_cast<double>(n);
  for (const auto& y : grid) {
    std::vector<double> vn = drift_finite(y, n, s, q);
    std::vector<double> v = drift_limit(y, s, q);
    double gap = 0.0;
    for (std::size_t i = 0; i < vn.size(); ++i) gap = std::max(gap, std::abs(vn[i] - v[i]));
    report.sup_drift_gap = std::max(report.sup_drift_gap, gap);

    // expected jump norm per unit time, sup-norm jumps of size 1
    double jump_rate = 0.0;
    for (int i = 0; i < q.size; ++i) {
      if (y[i] == 0.0) continue;
      double counts = std::round(y[i] * nn);
      double flow = y[i] * std::pow(1.0 - s / nn, counts - 1.0);
      for (int j = 0; j < q.size; ++j) {
        if (q(i, j) > 0.0) jump_rate += flow * q(i, j);
      }
    }
    report.max_jump_norm_rate = std::max(report.max_jump_norm_rate, jump_rate);
  }
  return report;
}

double lambert_w0(double x) {
  if (x < kNegInvE - 1e-15) {
    throw std::invalid_argument("lambert_w0: x = " + fmt_double(x) + " below -1/e");
  }
  if (x <= kNegInvE) return -1.0;

  double w;
  if (x < kNegInvE + 0.05) {
    // branch-point series in p = sqrt(2 (e x + 1))
    double p = std::sqrt(2.0 * (std::exp(1.0) * x + 1.0));
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else if (x > std::exp(1.0)) {
    double l1 = std::log(x);
    double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  } else {
    // Pade-style rational fit around 0
    w = x * (60.0 + 114.0 * x + 17.0 * x * x) / (60.0 + 174.0 * x + 101.0 * x * x);
  }

  for (int it = 0; it < 60; ++it) {
    double ew = std::exp(w);
    double f = w * ew - x;
    if (f == 0.0) break;
    double wp1 = w + 1.0;
    if (std::abs(wp1) < 1e-9) break;  // at the branch point the series start is already exact
    double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    double step = f / denom;
    w -= step;
    if (std::abs(step) <= 1e-16 * (1.0 + std::abs(w))) break;
  }
  return std::max(w, -1.0);
}

double phi_alpha(double alpha) {
  if (alpha < 1.0 - 1e-12) {
    throw std::invalid_argument("phi_alpha: alpha must be at least 1");
  }
  alpha = std::max(alpha, 1.0);
  double x = -alpha * std::exp(-alpha);
  x = std::max(x, kNegInvE);  // rounding can dip below the branch point
  return -lambert_w0(x);
}

namespace {

// min of f over [lo, hi]: coarse scan to bracket, then golden-section.
// Deterministic; xtol is the final bracket width.
std::pair<double, double> minimize_scalar(const std::function<double(double)>& f,
                                          double lo, double hi, double xtol) {
  constexpr int kScan = 256;
  double best_x = lo, best_v = f(lo);
  for (int k = 1; k <= kScan; ++k) {
    double x = lo + (hi - lo) * k / kScan;
    double v = f(x);
    if (v < best_v) {
      best_v = v;
      best_x = x;
    }
  }
  double a = std::max(lo, best_x - (hi - lo) / kScan);
  double b = std::min(hi, best_x + (hi - lo) / kScan);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > xtol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  double x = 0.5 * (a + b);
  return {x, f(x)};
}

// Root of monotone f on [lo, hi] by bisection, assuming f(lo), f(hi)
// bracket zero.
double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

CriticalResult critical_s(int num_squares, double alpha_max) {
  if (num_squares < 2) throw std::invalid_argument("critical_s: need at least 2 squares");
  CriticalResult best;
  best.s_star = std::numeric_limits<double>::infinity();
  for (int k = 1; k < num_squares; ++k) {
    auto objective = [&](double alpha) {
      return (num_squares - k) * alpha + k * phi_alpha(alpha);
    };
    auto [alpha, value] = minimize_scalar(objective, 1.0, alpha_max, 1e-10);
    // the boundary alpha -> 1 is admissible with value I
    if (objective(1.0) < value) {
      alpha = 1.0;
      value = objective(1.0);
    }
    if (value < best.s_star - 1e-9) {
      best.s_star = value;
      best.k = k;
      best.alpha = alpha;
    }
  }
  best.alpha_at_boundary = best.alpha - 1.0 < 1e-6;
  return best;
}

namespace {

bool is_regular_routing(const RoutingMatrix& q) {
  int deg0 = -1;
  for (int i = 0; i < q.size; ++i) {
    int deg = 0;
    for (int j = 0; j < q.size; ++j) {
      if (q(i, j) > 0.0) ++deg;
    }
    if (i == 0) deg0 = deg;
    if (deg != deg0 || deg == 0) return false;
  }
  return true;
}

double residual_norm(const std::vector<double>& y, double s, const RoutingMatrix& q) {
  auto v = drift_limit(y, s, q);
  double r = 0.0;
  for (double x : v) r = std::max(r, std::abs(x));
  return r;
}

// Damped Newton on the reduced system (last coordinate eliminated).
// Returns true if converged to a simplex point with small residual.
bool newton_polish(std::vector<double>& y, double s, const RoutingMatrix& q,
                   const StationaryOptions& opts) {
  const int dim = q.size;
  const int red = dim - 1;
  auto g = [&](double x) { return x * std::exp(-s * x); };
  auto gp = [&](double x) { return (1.0 - s * x) * std::exp(-s * x); };

  for (int iter = 0; iter < opts.max_newton_iters; ++iter) {
    std::vector<double> v = drift_limit(y, s, q);
    double res = 0.0;
    for (double x : v) res = std::max(res, std::abs(x));
    if (res <= 1e-12) return true;

    // dV_i/dy_k = -delta_ik g'(y_i) + Q_ki g'(y_k); reduce with
    // y_last = 1 - sum of the others.
    Eigen::MatrixXd jac(red, red);
    for (int i = 0; i < red; ++i) {
      double wrt_last = q(dim - 1, i) * gp(y[dim - 1]);
      for (int k = 0; k < red; ++k) {
        double full = (i == k ? -gp(y[i]) : 0.0) + q(k, i) * gp(y[k]);
        jac(i, k) = full - wrt_last;
      }
    }
    Eigen::VectorXd rhs(red);
    for (int i = 0; i < red; ++i) rhs(i) = -v[i];
    Eigen::VectorXd delta = jac.partialPivLu().solve(rhs);
    if (!delta.allFinite()) return false;

    double lambda = 1.0;
    bool moved = false;
    for (int half = 0; half < 40; ++half, lambda *= 0.5) {
      std::vector<double> trial = y;
      double step_inf = 0.0;
      double tail = 1.0;
      for (int i = 0; i < red; ++i) {
        trial[i] = y[i] + lambda * delta(i);
        step_inf = std::max(step_inf, std::abs(lambda * delta(i)));
      }
      for (int i = 0; i < red; ++i) tail -= trial[i];
      trial[dim - 1] = tail;
      // clamp-and-rescale onto the simplex
      double sum = 0.0;
      for (double& x : trial) {
        if (x < 0.0) x = 0.0;
        sum += x;
      }
      if (sum <= 0.0) continue;
      for (double& x : trial) x /= sum;
      double trial_res = residual_norm(trial, s, q);
      if (trial_res < res || step_inf <= 1e-14) {
        y = trial;
        moved = true;
        if (step_inf <= 1e-14) return trial_res <= 1e-12;
        break;
      }
    }
    if (!moved) return false;
  }
  return residual_norm(y, s, q) <= 1e-12;
}

// colex comparison of rounded coordinates (last coordinate most significant)
bool colex_less(const std::vector<double>& a, const std::vector<double>& b) {
  for (std::size_t i = a.size(); i-- > 0;) {
    long long ra = llround(a[i] * 1e9);
    long long rb = llround(b[i] * 1e9);
    if (ra != rb) return ra < rb;
  }
  return false;
}

void merge_point(StationaryPointSet& set, std::vector<double> y, double res,
                 double dedup_tol) {
  for (const auto& p : set.points) {
    double d = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) d = std::max(d, std::abs(p[i] - y[i]));
    if (d < dedup_tol) return;
  }
  set.points.push_back(std::move(y));
  set.residuals.push_back(res);
}

void sort_points(StationaryPointSet& set) {
  std::vector<std::size_t> order(set.points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return colex_less(set.points[a], set.points[b]);
  });
  StationaryPointSet sorted;
  sorted.maybe_incomplete = set.maybe_incomplete;
  for (std::size_t k : order) {
    sorted.points.push_back(std::move(set.points[k]));
    sorted.residuals.push_back(set.residuals[k]);
  }
  set = std::move(sorted);
}

// Emits every assignment of `high` coordinates equal to a (rest b).
void emit_two_value_points(StationaryPointSet& set, int dim, int high, double a,
                           double b, double s, const RoutingMatrix& q,
                           const StationaryOptions& opts) {
  double combos = 1.0;
  for (int k = 1; k <= high; ++k) combos *= static_cast<double>(dim - high + k) / k;
  if (set.points.size() + combos > 500000.0) {
    throw capacity_error("stationary-point enumeration would exceed 500000 points");
  }
  std::vector<int> pick(high);
  std::iota(pick.begin(), pick.end(), 0);
  for (;;) {
    std::vector<double> y(dim, b);
    for (int idx : pick) y[idx] = a;
    // rescale tiny accumulation error so the point is exactly on the simplex
    double sum = std::accumulate(y.begin(), y.end(), 0.0);
    for (double& x : y) x /= sum;
    newton_polish(y, s, q, opts);
    double res = residual_norm(y, s, q);
    if (res <= opts.residual_tol) merge_point(set, std::move(y), res, opts.dedup_tol);
    // next combination
    int pos = high - 1;
    while (pos >= 0 && pick[pos] == dim - high + pos) --pos;
    if (pos < 0) break;
    ++pick[pos];
    for (int j = pos + 1; j < high; ++j) pick[j] = pick[j - 1] + 1;
  }
}

}  // namespace

StationaryPointSet regular_stationary_points(double s, const RoutingMatrix& q,
                                             const StationaryOptions& opts) {
  int num_squares = q.size;
  if (num_squares < 2) throw std::invalid_argument("need at least 2 squares");
  if (s < 0.0) throw std::invalid_argument("s must be nonnegative");
  if (!is_regular_routing(q)) {
    throw std::invalid_argument("the two-value fast path needs a regular graph");
  }
  StationaryPointSet set;

  // uniform point always balances a regular graph
  std::vector<double> uniform(num_squares, 1.0 / num_squares);
  merge_point(set, uniform, residual_norm(uniform, s, q), opts.dedup_tol);

  if (s > 0.0) {
    const int dim = num_squares;
    // Coordinates split into `high` entries a = alpha/s (decreasing branch)
    // and dim-high entries b = phi(alpha)/s, with
    // psi(alpha) = high*alpha + (dim-high)*phi(alpha) = s.
    for (int high = 1; high < dim; ++high) {
      auto psi = [&](double alpha) {
        return high * alpha + (dim - high) * phi_alpha(alpha);
      };
      auto [alpha_min, psi_min] = minimize_scalar(psi, 1.0, opts.alpha_max, 1e-12);
      std::vector<double> roots;
      if (std::abs(psi_min - s) <= 1e-12) {
        roots.push_back(alpha_min);
      } else if (psi_min < s) {
        // psi decreases to its minimum then increases; a root may sit on
        // either monotone piece
        if (psi(1.0) >= s && alpha_min > 1.0) {
          roots.push_back(bisect([&](double x) { return psi(x) - s; }, 1.0, alpha_min));
        }
        if (psi(opts.alpha_max) >= s) {
          roots.push_back(
              bisect([&](double x) { return psi(x) - s; }, alpha_min, opts.alpha_max));
        }
      }
      for (double alpha : roots) {
        double a = alpha / s;
        double b = phi_alpha(alpha) / s;
        emit_two_value_points(set, dim, high, a, b, s, q, opts);
      }
    }
  }
  sort_points(set);
  return set;
}

StationaryPointSet find_stationary_points(double s, const RoutingMatrix& q,
                                          const StationaryOptions& opts) {
  if (q.size < 2) throw std::invalid_argument("need at least 2 squares");
  StationaryPointSet set;
  const int dim = q.size;

  if (is_regular_routing(q)) {
    StationaryPointSet fast = regular_stationary_points(s, q, opts);
    for (std::size_t k = 0; k < fast.points.size(); ++k) {
      merge_point(set, std::move(fast.points[k]), fast.residuals[k], opts.dedup_tol);
    }
  }

  // deterministic multi-start over the mesh grid
  double mesh_count = 1.0;
  for (int k = 1; k < dim; ++k) mesh_count *= static_cast<double>(opts.mesh + k) / k;
  if (mesh_count > 200000.0) {
    throw capacity_error("multi-start grid would hold " + fmt_double(mesh_count) +
                         " points; reduce mesh or graph size");
  }
  std::vector<std::int32_t> comp(dim, 0);
  comp[dim - 1] = opts.mesh;
  for (;;) {
    std::vector<double> y(dim);
    for (int i = 0; i < dim; ++i) y[i] = static_cast<double>(comp[i]) / opts.mesh;
    if (newton_polish(y, s, q, opts)) {
      double res = residual_norm(y, s, q);
      if (res <= opts.residual_tol) merge_point(set, std::move(y), res, opts.dedup_tol);
    }
    // successor (same scheme as state enumeration)
    std::int32_t tail = comp[dim - 1];
    if (tail > 0) {
      comp[dim - 2] += 1;
      comp[dim - 1] -= 1;
    } else {
      int k = dim - 2;
      while (k >= 0 && comp[k] == 0) --k;
      if (k <= 0) break;
      std::int32_t carry = comp[k];
      comp[k] = 0;
      comp[k - 1] += 1;
      comp[dim - 1] = carry - 1;
    }
  }

  set.maybe_incomplete = set.points.empty();
  sort_points(set);
  return set;
}

}  // namespace crowdmf
