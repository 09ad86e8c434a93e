#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "varopt/ais.hpp"
#include "varopt/rbm.hpp"

namespace varopt {

/// g(beta) sampled on a uniform grid over [0, 1].
///
/// `g_raw` holds the estimates as measured, `g_smoothed` the box-filtered
/// and floor-clamped values the solvers consume, and `dlog_g` the numerical
/// derivative of log g_smoothed. Freshly built tables have
/// g_smoothed == g_raw and dlog_g == 0 until `smooth` / `dlog_g` run.
struct GTable {
  std::vector<double> grid;
  std::vector<double> g_raw;
  std::vector<double> g_smoothed;
  std::vector<double> dlog_g;

  /// Table with K~ intervals and g_raw = g_smoothed = values.
  static GTable from_values(std::vector<double> values);
  /// Samples `g` at k / k_tilde and runs `dlog_g` on the result.
  static GTable from_function(const std::function<double(double)>& g, int k_tilde);

  int intervals() const { return static_cast<int>(grid.size()) - 1; }

  /// Piecewise-linear interpolation of g_smoothed / dlog_g at beta.
  double g_at(double beta) const;
  double dlog_g_at(double beta) const;

  /// Throws ContractViolation unless the grid is uniform on [0,1], columns
  /// have matching length and g values are finite and nonnegative.
  void validate() const;
};

/// beta_k = k / K.
Schedule linear_schedule(int k_steps);

enum class GWeighting { SelfNormalized, Unweighted };

/// Survey pass: AIS with the linear K~ schedule and N~ chains; at every
/// step the importance-weighted variance of dlog_pstar_dbeta over the
/// ensemble is recorded as g(beta~_k). Step 0 uses the exact base samples.
GTable estimate_g_table(const GeometricPath& path, int k_tilde, int n_tilde,
                        std::uint64_t seed,
                        GWeighting weighting = GWeighting::SelfNormalized);

/// Uniform moving average of g_raw over a (2 * half_width + 1) window,
/// truncated and renormalized at the ends.
GTable smooth(const GTable& table, int half_width);

/// Default smoothing half width, ceil(K~ / 100).
int default_half_width(int k_tilde);

/// Floor-clamps g_smoothed at 1e-12 * max and fills dlog_g with central
/// differences of log g_smoothed (one-sided at the ends).
GTable dlog_g(const GTable& table);

/// True when the table carries no usable signal (every g is zero or not
/// positive), in which case any schedule is optimal.
bool is_degenerate(const GTable& table);

struct DeSolveOptions {
  int k_steps = 1000;
  /// Stop once max_k |beta'' + beta'^2 / 2 * dlog_g(beta)| falls below this.
  double tol = 1e-6;
  int max_iter = 200;
  double relaxation = 0.9;
};

struct DeSolveReport {
  int iterations = 0;
  double residual = 0.0;
  bool fallback_linear = false;
};

/// Solves beta'' + (beta'^2 / 2) d/dbeta log g(beta) = 0 with beta(0) = 0,
/// beta(1) = 1 on K intervals (central differences). The start is the better
/// of the quadrature schedule and a shooting solution of the discrete
/// equations; damped Newton iterations then run until the residual is below
/// tol. Throws NumericalFailure (carrying the final residual) if it does not
/// converge or the result is not monotone. A degenerate table yields the
/// linear schedule and a warning.
Schedule de_solve(const GTable& table, const DeSolveOptions& options,
                  DeSolveReport* report = nullptr);

/// Max |beta''_k + (beta'_k^2 / 2) dlog_g(beta_k)| over interior nodes,
/// central differences with dt = 1/K.
double euler_lagrange_residual(const Schedule& schedule, const GTable& table);

/// Optimal schedule from the first integral beta'^2 g(beta) = const:
/// beta_k solves int_0^beta_k sqrt(g) = (k/K) int_0^1 sqrt(g). Falls back to
/// linear (with a warning) when the integral vanishes.
Schedule quadrature_schedule(const GTable& table, int k_steps);

struct DecelerateOptions {
  double max_delta = 1.0;
  double tol = 1e-6;
  int max_iter = 10000;
};

/// Caps every step at max_delta by repeatedly clipping and renormalizing the
/// deltas until the clipped deltas sum to 1 within tol. A schedule whose
/// steps already satisfy max_delta * (1 + tol) is returned unchanged.
/// Throws ContractViolation when K * max_delta < 1.
Schedule decelerate(const Schedule& schedule, const DecelerateOptions& options);

/// K * sum_k (beta_{k+1} - beta_k)^2 g(beta_k).
double functional_j(const Schedule& schedule, const std::function<double(double)>& g);
double functional_j(const Schedule& schedule, const GTable& table);

/// Sum over k of Var_{beta_k}[log p*_{beta_{k+1}} - log p*_{beta_k}] under
/// exact p_{beta_k}: the log-weight variance with perfect transitions.
/// Enumerates all visible states; refuses D > max_visible.
double var_log_w_perfect(const GeometricPath& path, const Schedule& schedule,
                         int max_visible = 16);

/// Relative spread (max - min) / mean over interior nodes of
/// ((beta_{k+1} - beta_{k-1}) / 2)^2 g(beta_k), the discrete beta'^2 g.
double first_integral_spread(const Schedule& schedule,
                             const std::function<double(double)>& g);

}  // namespace varopt
