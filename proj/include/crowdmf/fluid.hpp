#pragma once

#include <cstdint>
#include <vector>

#include "crowdmf/graph.hpp"

namespace crowdmf {

// Limit drift V(y)_i = -y_i e^{-s y_i} + sum_j y_j e^{-s y_j} Q_ji.
// Components sum to zero.
std::vector<double> drift_limit(const std::vector<double>& y, double s,
                                const RoutingMatrix& q);

// Pre-limit drift V^N(y) = sum_{i,j} y_i (1-s/N)^{N y_i - 1} Q_ij (-e_i+e_j).
// y must sit on the N-lattice (N*y integer within 1e-9).
std::vector<double> drift_finite(const std::vector<double>& y, std::int64_t n,
                                 double s, const RoutingMatrix& q);

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> points;
};

struct FlowOptions {
  double dt = 1e-3;              // fixed RK4 step, capped at 0.01
  double projection_tol = 1e-9;  // max per-step simplex adjustment
};

// Classical fixed-step 4th-order integration of dy/dt = V(y). Each stored
// point is renormalized onto the simplex (negatives clamped, then rescaled);
// an adjustment beyond projection_tol aborts with a suggestion to lower dt.
Trajectory integrate_flow(const std::vector<double>& y0, double s,
                          const RoutingMatrix& q, double horizon,
                          const FlowOptions& opts = {});

// Final point of integrate_flow without storing the path.
std::vector<double> flow_endpoint(const std::vector<double>& y0, double s,
                                  const RoutingMatrix& q, double horizon,
                                  const FlowOptions& opts = {});

// a_N(s) = max(s/N, |(N-1) log(1-s/N) + s|), the uniform bound on the
// per-coordinate gap between pre-limit and limit service factors.
double drift_gap_bound(std::int64_t n, double s);

// The three convergence conditions evaluated on a grid of lattice points:
// (i) sup ||V^N - V||_inf against a_N(s) * I, (ii) expected jump norm per
// unit time against I, (iii) the large-jump term with threshold 1/N, which
// is identically zero since every jump has norm exactly 1/N.
struct KurtzReport {
  double sup_drift_gap = 0.0;
  double drift_gap_bound = 0.0;
  double max_jump_norm_rate = 0.0;
  double jump_norm_bound = 0.0;
  double large_jump_term = 0.0;
  std::size_t grid_points = 0;
};

KurtzReport kurtz_conditions_report(std::int64_t n, double s,
                                    const RoutingMatrix& q,
                                    const std::vector<std::vector<double>>& grid);

// Principal branch of w e^w = x on x >= -1/e. Halley iteration; residual
// |w e^w - x| <= 1e-12 max(1,|x|) away from the branch point.
double lambert_w0(double x);

// phi(alpha) = -W0(-alpha e^{-alpha}) for alpha >= 1: the conjugate point
// b <= 1 with b e^{-b} = alpha e^{-alpha}.
double phi_alpha(double alpha);

struct CriticalResult {
  double s_star = 0.0;
  int k = 0;          // argmin K in the double minimum
  double alpha = 0.0; // argmin alpha
  bool alpha_at_boundary = false;  // alpha - 1 < 1e-6
};

// s* = min_{K=1..I-1} min_{alpha in (1, alpha_max]} ((I-K) alpha + K phi(alpha)).
// Ties resolved toward the smallest K within 1e-9.
CriticalResult critical_s(int num_squares, double alpha_max = 50.0);

struct StationaryPointSet {
  std::vector<std::vector<double>> points;
  std::vector<double> residuals;       // ||V(y)||_inf per point
  bool maybe_incomplete = false;       // general path found nothing
};

struct StationaryOptions {
  int mesh = 7;                 // multi-start grid resolution
  double residual_tol = 1e-10;
  double dedup_tol = 1e-8;
  double alpha_max = 50.0;
  int max_newton_iters = 100;
};

// Zeros of the limit drift on the simplex. Regular graphs combine the
// two-value closed-form enumeration with damped-Newton multi-start; other
// graphs use the Newton path alone. Points are deduplicated and ordered by
// colex of rounded coordinates.
StationaryPointSet find_stationary_points(double s, const RoutingMatrix& q,
                                          const StationaryOptions& opts = {});

// Closed-form fast path for regular graphs: stationary points take at most
// two distinct coordinate values a > b with K a + (I-K) b = 1 and
// a e^{-sa} = b e^{-sb}; reduces to scalar root-finding per K. Throws if
// the routing is not regular.
StationaryPointSet regular_stationary_points(double s, const RoutingMatrix& q,
                                             const StationaryOptions& opts = {});

}  // namespace crowdmf
