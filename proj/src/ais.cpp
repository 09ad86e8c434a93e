#include "varopt/ais.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "varopt/error.hpp"
#include "varopt/numeric.hpp"

namespace varopt {

namespace {

constexpr double kEndpointTolerance = 1e-12;

double checked_log_sum_exp(std::span<const double> log_weights, const char* what) {
  const double lse = log_sum_exp(log_weights);
  if (!std::isfinite(lse)) {
    throw NumericalFailure(std::string(what) + ": importance weights are degenerate (log-sum-exp is " +
                           std::to_string(lse) + ")");
  }
  return lse;
}

}  // namespace

Schedule::Schedule(std::vector<double> betas) : betas_(std::move(betas)) {
  require(betas_.size() >= 2, "a schedule needs at least beta_0 and beta_K");
  require(std::abs(betas_.front()) <= kEndpointTolerance, "schedule must start at beta = 0");
  require(std::abs(betas_.back() - 1.0) <= kEndpointTolerance, "schedule must end at beta = 1");
  betas_.front() = 0.0;
  betas_.back() = 1.0;
  for (std::size_t k = 1; k < betas_.size(); ++k) {
    require(std::isfinite(betas_[k]), "schedule entries must be finite");
    require(betas_[k] >= betas_[k - 1],
            "schedule must be non-decreasing (violated at k = " + std::to_string(k) + ")");
  }
}

std::vector<double> Schedule::deltas() const {
  std::vector<double> d(betas_.size() - 1);
  for (std::size_t k = 0; k + 1 < betas_.size(); ++k) d[k] = betas_[k + 1] - betas_[k];
  return d;
}

double Schedule::max_delta() const {
  const auto d = deltas();
  return *std::max_element(d.begin(), d.end());
}

double ess(std::span<const double> log_weights) {
  require(log_weights.size() >= 2, "ESS needs at least two weights");
  const double lse = checked_log_sum_exp(log_weights, "ess");
  const double n = static_cast<double>(log_weights.size());
  std::vector<double> normalized(log_weights.size());
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    normalized[i] = n * std::exp(log_weights[i] - lse);
  }
  return n / (1.0 + sample_variance(normalized));
}

double on_the_fly_expectation(std::span<const double> log_weights,
                              std::span<const double> f_values) {
  require(log_weights.size() == f_values.size(), "weights and values must have equal length");
  require(!log_weights.empty(), "expectation over an empty ensemble");
  const double lse = checked_log_sum_exp(log_weights, "on-the-fly expectation");
  double acc = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    acc += std::exp(log_weights[i] - lse) * f_values[i];
  }
  return acc;
}

double log_weight_std(std::span<const double> log_weights) {
  return std::sqrt(sample_variance(log_weights));
}

double log_z_estimate(double log_z_base, std::span<const double> log_weights) {
  const double lse = checked_log_sum_exp(log_weights, "log Z estimate");
  return log_z_base + lse - std::log(static_cast<double>(log_weights.size()));
}

AisResult run_ais(const GeometricPath& path, const Schedule& schedule, int n_runs,
                  std::uint64_t seed, const AisOptions& options) {
  require(n_runs >= 2, "AIS needs at least two runs");
  const int n = n_runs;
  const int k_steps = schedule.steps();
  const auto& betas = schedule.betas();

  std::vector<Rng> rngs;
  std::vector<VisibleState> states;
  rngs.reserve(n);
  states.reserve(n);
  for (int i = 0; i < n; ++i) {
    rngs.push_back(Rng::for_stream(seed, static_cast<std::uint64_t>(i)));
    states.push_back(sample_base(path, rngs.back()));
  }
  std::vector<GibbsWorkspace> workspaces(n);
  std::vector<double> log_w(n, 0.0);
  std::vector<double> derivative(n, 0.0);
  std::vector<double> f_values(n, 0.0);

  const bool observe = options.trace || options.hook;
  AisResult result;
  result.k = k_steps;
  if (options.trace) result.on_the_fly.emplace();

  // Step k: reweight v_{k-1} from beta_{k-1} to beta_k, report the ensemble,
  // then move v_{k-1} -> v_k with the transition that leaves p_{beta_k}
  // invariant. Step 0 only reports the exact base samples; the transition
  // after the last reweighting cannot change any weight and is skipped.
  for (int k = 0; k <= k_steps; ++k) {
    const double delta = k > 0 ? betas[k] - betas[k - 1] : 0.0;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      derivative[i] = prepare_sweep(states[i], path, workspaces[i]);
      if (k > 0) log_w[i] += delta * derivative[i];
    }

    if (observe) {
      if (options.hook) {
        options.hook(EnsembleView{k, betas[k], log_w, states, derivative});
      }
      if (options.trace) {
        StepStats stats;
        stats.beta = betas[k];
        stats.ess = ess(log_w);
        for (const auto& f : options.observers) {
          for (int i = 0; i < n; ++i) f_values[i] = f(states[i]);
          stats.expectations.push_back(on_the_fly_expectation(log_w, f_values));
        }
        result.on_the_fly->push_back(std::move(stats));
      }
    }

    if (k > 0 && k < k_steps) {
      const double beta = betas[k];
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n; ++i) gibbs_sweep(states[i], beta, path, rngs[i], workspaces[i]);
    }
  }

  for (int i = 0; i < n; ++i) {
    if (std::isnan(log_w[i])) {
      throw NumericalFailure("AIS produced a NaN log weight for run " + std::to_string(i));
    }
  }
  result.log_z_hat = log_z_estimate(path.log_z_base(), log_w);
  result.ess = ess(log_w);
  result.log_weight_std = log_weight_std(log_w);
  result.log_weights = std::move(log_w);
  return result;
}

}  // namespace varopt
