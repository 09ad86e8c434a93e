#include "varopt/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "varopt/diagnostics.hpp"
#include "varopt/error.hpp"
#include "varopt/numeric.hpp"
#include "varopt/oracle.hpp"

namespace varopt {

namespace {

constexpr double kGridTolerance = 1e-9;
constexpr double kFloorFraction = 1e-12;

double interpolate(const std::vector<double>& values, double beta) {
  const int n = static_cast<int>(values.size()) - 1;
  const double pos = std::clamp(beta, 0.0, 1.0) * n;
  const int i = std::min(static_cast<int>(pos), n - 1);
  const double t = pos - i;
  return (1.0 - t) * values[i] + t * values[i + 1];
}

// Slope of the piecewise-linear interpolant at beta.
double interpolation_slope(const std::vector<double>& values, double beta) {
  const int n = static_cast<int>(values.size()) - 1;
  const double pos = std::clamp(beta, 0.0, 1.0) * n;
  const int i = std::min(static_cast<int>(pos), n - 1);
  return (values[i + 1] - values[i]) * n;
}

std::vector<double> uniform_grid(int intervals) {
  std::vector<double> grid(intervals + 1);
  for (int k = 0; k <= intervals; ++k) grid[k] = static_cast<double>(k) / intervals;
  return grid;
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

// Thomas algorithm; sub[i] multiplies x[i-1], sup[i] multiplies x[i+1].
std::vector<double> solve_tridiagonal(std::vector<double> sub, std::vector<double> diag,
                                      std::vector<double> sup, std::vector<double> rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double m = sub[i] / diag[i - 1];
    diag[i] -= m * sup[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  std::vector<double> x(n);
  x[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - sup[i] * x[i + 1]) / diag[i];
  return x;
}

// F_k = beta_{k+1} - 2 beta_k + beta_{k-1} + (beta_{k+1} - beta_{k-1})^2 / 8 * L(beta_k),
// i.e. dt^2 times the Euler-Lagrange residual with central differences.
std::vector<double> scaled_residual(const std::vector<double>& b, const GTable& table) {
  const std::size_t n = b.size();
  std::vector<double> f(n, 0.0);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double span = b[k + 1] - b[k - 1];
    f[k] = b[k + 1] - 2.0 * b[k] + b[k - 1] + span * span / 8.0 * table.dlog_g_at(b[k]);
  }
  return f;
}

double sum_sq(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Marches the discrete Euler-Lagrange equation from beta_0 = 0 with a trial
// first step: F_k = 0 is a quadratic in beta_{k+1} given beta_k, beta_{k-1}.
// Returns beta_K, or +inf when the march overshoots or turns back.
long double march(const GTable& table, long double first, std::vector<long double>& b) {
  const std::size_t k_steps = b.size() - 1;
  b[0] = 0.0L;
  b[1] = first;
  for (std::size_t k = 1; k < k_steps; ++k) {
    const long double d = b[k] - b[k - 1];
    const long double l = table.dlog_g_at(static_cast<double>(b[k]));
    const long double disc = 1.0L + l * d;
    if (disc < 0.0L) return std::numeric_limits<long double>::infinity();
    const long double next = b[k - 1] + 4.0L * d / (1.0L + std::sqrt(disc));
    if (next < b[k] || next > 2.0L) return std::numeric_limits<long double>::infinity();
    b[k + 1] = next;
  }
  return b[k_steps];
}

// Shooting on the first step by bisection, in extended precision. Empty when
// no bracket is found.
std::vector<double> shooting_schedule(const GTable& table, int k_steps) {
  std::vector<long double> b(static_cast<std::size_t>(k_steps) + 1);
  long double lo = 0.0L, hi = 1.0L;
  if (!(march(table, hi, b) >= 1.0L)) return {};
  for (int i = 0; i < 200 && hi - lo > 0.0L; ++i) {
    const long double mid = 0.5L * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (march(table, mid, b) >= 1.0L ? hi : lo) = mid;
  }
  if (!std::isfinite(march(table, lo, b))) return {};
  std::vector<double> out(b.size());
  for (std::size_t k = 0; k < b.size(); ++k) out[k] = static_cast<double>(b[k]);
  out.back() = 1.0;
  return out;
}

}  // namespace

GTable GTable::from_values(std::vector<double> values) {
  require(values.size() >= 2, "a g table needs at least two grid points");
  GTable t;
  t.grid = uniform_grid(static_cast<int>(values.size()) - 1);
  t.g_raw = values;
  t.g_smoothed = std::move(values);
  t.dlog_g.assign(t.grid.size(), 0.0);
  t.validate();
  return t;
}

GTable GTable::from_function(const std::function<double(double)>& g, int k_tilde) {
  require(k_tilde >= 1, "k_tilde must be positive");
  std::vector<double> values(k_tilde + 1);
  for (int k = 0; k <= k_tilde; ++k) values[k] = g(static_cast<double>(k) / k_tilde);
  return varopt::dlog_g(from_values(std::move(values)));
}

double GTable::g_at(double beta) const { return interpolate(g_smoothed, beta); }

double GTable::dlog_g_at(double beta) const { return interpolate(dlog_g, beta); }

void GTable::validate() const {
  const std::size_t n = grid.size();
  require(n >= 2, "a g table needs at least two grid points");
  require(g_raw.size() == n && g_smoothed.size() == n && dlog_g.size() == n,
          "g table columns must have equal length");
  const double h = 1.0 / static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k) {
    require(std::abs(grid[k] - static_cast<double>(k) * h) <= kGridTolerance,
            "g table grid must be uniform on [0, 1] (row " + std::to_string(k) + ")");
    require(std::isfinite(g_raw[k]) && g_raw[k] >= 0.0 && std::isfinite(g_smoothed[k]) &&
                g_smoothed[k] >= 0.0,
            "g values must be finite and nonnegative (row " + std::to_string(k) + ")");
    require(std::isfinite(dlog_g[k]), "dlog_g must be finite (row " + std::to_string(k) + ")");
  }
}

Schedule linear_schedule(int k_steps) {
  require(k_steps >= 1, "a linear schedule needs K >= 1");
  return Schedule(uniform_grid(k_steps));
}

GTable estimate_g_table(const GeometricPath& path, int k_tilde, int n_tilde, std::uint64_t seed,
                        GWeighting weighting) {
  require(k_tilde >= 10, "k_tilde must be at least 10");
  require(n_tilde >= 10, "n_tilde must be at least 10");
  std::vector<double> g(k_tilde + 1, 0.0);
  std::vector<double> weights(n_tilde);

  AisOptions options;
  options.hook = [&](const EnsembleView& view) {
    const auto n = view.log_weights.size();
    if (weighting == GWeighting::SelfNormalized) {
      const double lse = log_sum_exp(view.log_weights);
      if (!std::isfinite(lse)) {
        throw NumericalFailure("g estimation: degenerate importance weights at step " +
                               std::to_string(view.step));
      }
      for (std::size_t i = 0; i < n; ++i) weights[i] = std::exp(view.log_weights[i] - lse);
    } else {
      std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(n));
    }
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += weights[i] * view.path_derivative[i];
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = view.path_derivative[i] - mean;
      var += weights[i] * d * d;
    }
    g[view.step] = var;
  };
  run_ais(path, linear_schedule(k_tilde), n_tilde, seed, options);
  return GTable::from_values(std::move(g));
}

GTable smooth(const GTable& table, int half_width) {
  require(half_width >= 0, "smoothing half width must be nonnegative");
  GTable out = table;
  const int n = static_cast<int>(table.g_raw.size());
  std::vector<double> prefix(n + 1, 0.0);
  for (int k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + table.g_raw[k];
  for (int k = 0; k < n; ++k) {
    const int lo = std::max(0, k - half_width);
    const int hi = std::min(n - 1, k + half_width);
    out.g_smoothed[k] =
        half_width == 0 ? table.g_raw[k] : (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1);
    out.g_smoothed[k] = std::max(out.g_smoothed[k], 0.0);
  }
  return out;
}

int default_half_width(int k_tilde) { return (k_tilde + 99) / 100; }

GTable dlog_g(const GTable& table) {
  GTable out = table;
  const int n = static_cast<int>(table.g_smoothed.size());
  const double peak = max_of(table.g_smoothed);
  out.dlog_g.assign(n, 0.0);
  if (!(peak > 0.0)) return out;
  const double floor = kFloorFraction * peak;
  std::vector<double> log_g(n);
  for (int k = 0; k < n; ++k) {
    out.g_smoothed[k] = std::max(out.g_smoothed[k], floor);
    log_g[k] = std::log(out.g_smoothed[k]);
  }
  const double h = 1.0 / (n - 1);
  out.dlog_g[0] = (log_g[1] - log_g[0]) / h;
  out.dlog_g[n - 1] = (log_g[n - 1] - log_g[n - 2]) / h;
  for (int k = 1; k < n - 1; ++k) out.dlog_g[k] = (log_g[k + 1] - log_g[k - 1]) / (2.0 * h);
  return out;
}

bool is_degenerate(const GTable& table) {
  return !(max_of(table.g_smoothed) > std::numeric_limits<double>::min());
}

Schedule quadrature_schedule(const GTable& table, int k_steps) {
  require(k_steps >= 1, "K must be positive");
  const int n = table.intervals();
  const double h = 1.0 / n;
  std::vector<double> cumulative(n + 1, 0.0);
  double prev = std::sqrt(table.g_smoothed[0]);
  for (int i = 1; i <= n; ++i) {
    const double cur = std::sqrt(table.g_smoothed[i]);
    cumulative[i] = cumulative[i - 1] + 0.5 * h * (prev + cur);
    prev = cur;
  }
  const double total = cumulative[n];
  if (!(total > 0.0) || !std::isfinite(total)) {
    warn("integral of sqrt(g) vanishes; using the linear schedule");
    return linear_schedule(k_steps);
  }

  std::vector<double> betas(k_steps + 1);
  betas[0] = 0.0;
  betas[k_steps] = 1.0;
  for (int k = 1; k < k_steps; ++k) {
    const double target = total * k / k_steps;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    const int i = std::clamp(static_cast<int>(it - cumulative.begin()) - 1, 0, n - 1);
    const double width = cumulative[i + 1] - cumulative[i];
    const double frac = width > 0.0 ? (target - cumulative[i]) / width : 0.0;
    betas[k] = std::clamp(table.grid[i] + h * frac, betas[k - 1], 1.0);
  }
  return Schedule(std::move(betas));
}

double euler_lagrange_residual(const Schedule& schedule, const GTable& table) {
  const double k2 = static_cast<double>(schedule.steps()) * schedule.steps();
  return max_abs(scaled_residual(schedule.betas(), table)) * k2;
}

Schedule de_solve(const GTable& table, const DeSolveOptions& options, DeSolveReport* report) {
  require(options.k_steps >= 2, "de_solve needs K >= 2");
  require(options.tol > 0.0, "de_solve tolerance must be positive");
  require(options.max_iter >= 1, "de_solve needs at least one iteration");
  require(options.relaxation > 0.0 && options.relaxation <= 1.0,
          "relaxation factor must lie in (0, 1]");
  table.validate();
  DeSolveReport local;
  DeSolveReport& rep = report ? *report : local;
  rep = DeSolveReport{};

  const int k_steps = options.k_steps;
  if (is_degenerate(table)) {
    warn("g is zero along the whole path; using the linear schedule");
    rep.fallback_linear = true;
    return linear_schedule(k_steps);
  }

  const double k2 = static_cast<double>(k_steps) * k_steps;
  // Central second differences of numbers near 1 carry ~4 ulp of rounding,
  // amplified by K^2 in the residual.
  const double rounding_floor = 64.0 * std::numeric_limits<double>::epsilon() * k2;

  // Start from whichever of the quadrature and shooting solutions has the
  // smaller residual.
  std::vector<double> b = quadrature_schedule(table, k_steps).betas();
  std::vector<double> f = scaled_residual(b, table);
  double residual = max_abs(f) * k2;
  if (std::vector<double> shot = shooting_schedule(table, k_steps); !shot.empty()) {
    std::vector<double> shot_f = scaled_residual(shot, table);
    if (const double r = max_abs(shot_f) * k2; r < residual) {
      b = std::move(shot);
      f = std::move(shot_f);
      residual = r;
    }
  }

  const std::size_t m = static_cast<std::size_t>(k_steps) - 1;  // interior unknowns
  std::vector<double> sub(m), diag(m), sup(m), rhs(m);
  int iter = 0;
  while (residual >= options.tol && iter < options.max_iter) {
    ++iter;
    const double merit = sum_sq(f);
    std::vector<double> trial;
    std::vector<double> trial_f;
    double update = 0.0;
    bool accepted = false;
    // Newton step with the full Jacobian, then with dlog_g frozen at the
    // current nodes; the latter is better conditioned when dlog_g is rough.
    // Steps must pass an Armijo test on the squared 2-norm.
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      const bool full = attempt == 0;
      for (std::size_t r = 0; r < m; ++r) {
        const std::size_t k = r + 1;
        const double span = b[k + 1] - b[k - 1];
        const double slope = span / 4.0 * table.dlog_g_at(b[k]);
        sub[r] = 1.0 - slope;
        diag[r] = -2.0;
        if (full) diag[r] += span * span / 8.0 * interpolation_slope(table.dlog_g, b[k]);
        sup[r] = 1.0 + slope;
        rhs[r] = -f[k];
      }
      const std::vector<double> step = solve_tridiagonal(sub, diag, sup, rhs);
      double omega = options.relaxation;
      for (int halving = 0; halving < 30; ++halving, omega *= 0.5) {
        trial = b;
        for (std::size_t r = 0; r < m; ++r) trial[r + 1] += omega * step[r];
        trial_f = scaled_residual(trial, table);
        const double trial_merit = sum_sq(trial_f);
        if (std::isfinite(trial_merit) && trial_merit <= (1.0 - 1e-4 * omega) * merit) {
          accepted = true;
          update = omega * max_abs(step);
          break;
        }
      }
    }
    if (!accepted) {
      if (residual <= rounding_floor) break;
      rep.iterations = iter;
      rep.residual = residual;
      throw NumericalFailure("de_solve stalled after " + std::to_string(iter) +
                             " iterations with residual " + std::to_string(residual));
    }
    const double trial_residual = max_abs(trial_f) * k2;
    b = std::move(trial);
    f = std::move(trial_f);
    residual = trial_residual;
    if (update < 1e-14 && residual <= rounding_floor) break;
  }
  rep.iterations = iter;
  rep.residual = residual;
  if (residual >= options.tol && residual > rounding_floor) {
    throw NumericalFailure("de_solve did not converge in " + std::to_string(iter) +
                           " iterations; residual " + std::to_string(residual));
  }

  for (std::size_t k = 1; k < b.size(); ++k) {
    if (b[k] < b[k - 1] - 1e-12) {
      throw NumericalFailure("de_solve fixed point is not monotone at k = " + std::to_string(k));
    }
    b[k] = std::max(b[k], b[k - 1]);
  }
  b.front() = 0.0;
  b.back() = 1.0;
  for (double& beta : b) beta = std::min(beta, 1.0);
  return Schedule(std::move(b));
}

Schedule decelerate(const Schedule& schedule, const DecelerateOptions& options) {
  const double cap = options.max_delta;
  require(cap > 0.0 && cap <= 1.0, "max delta must lie in (0, 1]");
  require(options.tol > 0.0, "deceleration tolerance must be positive");
  const int k_steps = schedule.steps();
  if (static_cast<double>(k_steps) * cap < 1.0) {
    throw ContractViolation("deceleration infeasible: K * max_delta = " +
                            std::to_string(k_steps * cap) + " < 1");
  }
  if (schedule.max_delta() <= cap * (1.0 + options.tol)) return schedule;

  std::vector<double> d = schedule.deltas();
  double norm = 0.0;
  bool converged = false;
  for (int iter = 0; iter < options.max_iter; ++iter) {
    norm = 0.0;
    for (double& x : d) {
      x = std::min(x, cap);
      norm += x;
    }
    if (std::abs(norm - 1.0) < options.tol) {
      converged = true;
      break;
    }
    for (double& x : d) x /= norm;
  }
  if (!converged) {
    throw NumericalFailure("deceleration did not converge; clipped deltas sum to " +
                           std::to_string(norm));
  }
  std::vector<double> betas(k_steps + 1, 0.0);
  for (int k = 0; k < k_steps; ++k) betas[k + 1] = betas[k] + d[k] / norm;
  betas[k_steps] = 1.0;
  for (int k = k_steps - 1; k > 0; --k) betas[k] = std::min(betas[k], 1.0);
  return Schedule(std::move(betas));
}

double functional_j(const Schedule& schedule, const std::function<double(double)>& g) {
  const auto& b = schedule.betas();
  const int k_steps = schedule.steps();
  double sum = 0.0;
  for (int k = 0; k < k_steps; ++k) {
    const double d = b[k + 1] - b[k];
    sum += d * d * g(b[k]);
  }
  return k_steps * sum;
}

double functional_j(const Schedule& schedule, const GTable& table) {
  return functional_j(schedule, [&table](double beta) { return table.g_at(beta); });
}

double var_log_w_perfect(const GeometricPath& path, const Schedule& schedule, int max_visible) {
  const PathEnumeration states(path, max_visible);
  const auto& la = states.log_pstar_base();
  const auto& lb = states.log_pstar_target();
  const auto& b = schedule.betas();
  const std::size_t n = la.size();
  std::vector<double> ratio(n);
  double total = 0.0;
  for (int k = 0; k < schedule.steps(); ++k) {
    const std::vector<double> p = states.probabilities(b[k]);
    double mean = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      ratio[s] = (b[k + 1] - b[k]) * (lb[s] - la[s]);
      mean += p[s] * ratio[s];
    }
    double var = 0.0;
    for (std::size_t s = 0; s < n; ++s) var += p[s] * (ratio[s] - mean) * (ratio[s] - mean);
    total += var;
  }
  return total;
}

double first_integral_spread(const Schedule& schedule, const std::function<double(double)>& g) {
  const auto& b = schedule.betas();
  require(schedule.steps() >= 2, "first-integral spread needs K >= 2");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double sum = 0.0;
  for (int k = 1; k < schedule.steps(); ++k) {
    const double half = 0.5 * (b[k + 1] - b[k - 1]);
    const double q = half * half * g(b[k]);
    lo = std::min(lo, q);
    hi = std::max(hi, q);
    sum += q;
  }
  const double mean = sum / (schedule.steps() - 1);
  return mean > 0.0 ? (hi - lo) / mean : 0.0;
}

}  // namespace varopt
