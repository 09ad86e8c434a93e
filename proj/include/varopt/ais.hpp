#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "varopt/rbm.hpp"

namespace varopt {

/// Annealing schedule 0 = beta_0 <= ... <= beta_K = 1.
class Schedule {
 public:
  /// Validates endpoints (within 1e-12, then snapped to exactly 0 and 1)
  /// and monotonicity.
  explicit Schedule(std::vector<double> betas);

  int steps() const { return static_cast<int>(betas_.size()) - 1; }
  const std::vector<double>& betas() const { return betas_; }
  double operator[](int k) const { return betas_[k]; }

  /// beta_{k+1} - beta_k for k = 0..K-1.
  std::vector<double> deltas() const;
  double max_delta() const;

 private:
  std::vector<double> betas_;
};

/// Self-normalized importance statistics of one intermediate distribution.
struct StepStats {
  double beta = 0.0;
  double ess = 0.0;
  std::vector<double> expectations;  // one per observer
};

struct AisResult {
  std::vector<double> log_weights;
  double log_z_hat = 0.0;
  double ess = 0.0;
  double log_weight_std = 0.0;
  int k = 0;
  std::optional<std::vector<StepStats>> on_the_fly;

  int n_runs() const { return static_cast<int>(log_weights.size()); }
};

using Observer = std::function<double(const VisibleState&)>;

/// View of the chain ensemble handed to a StepHook. At step k the states are
/// v_{k-1} and the log weights already include the update to beta_k, so the
/// pair is an importance sample of p_{beta_k}. Step 0 shows the exact base
/// samples with zero log weights.
struct EnsembleView {
  int step;
  double beta;
  std::span<const double> log_weights;
  std::span<const VisibleState> states;
  /// dlog_pstar_dbeta of each state (already computed for the weight update).
  std::span<const double> path_derivative;
};

using StepHook = std::function<void(const EnsembleView&)>;

struct AisOptions {
  std::vector<Observer> observers;
  /// Record per-step ESS (and observer expectations) into AisResult::on_the_fly.
  bool trace = false;
  StepHook hook;
};

/// Annealed importance sampling along `path` with `n_runs` chains.
///
/// Chain i draws from Rng::for_stream(seed, i) only and reductions run in
/// chain order, so results are bit-identical for a given (seed, schedule,
/// N, model) no matter how the chains are scheduled across threads.
/// Throws NumericalFailure if every log weight is -inf or NaN.
AisResult run_ais(const GeometricPath& path, const Schedule& schedule, int n_runs,
                  std::uint64_t seed, const AisOptions& options = {});

/// ESS = N / (1 + s^2) with w*_i = N w_i / sum w and s^2 the unbiased sample
/// variance of w*.
double ess(std::span<const double> log_weights);

/// sum_j w_j f_j / sum_j w_j, evaluated with max-shifted weights.
double on_the_fly_expectation(std::span<const double> log_weights,
                              std::span<const double> f_values);

double log_weight_std(std::span<const double> log_weights);

/// log Z_A + logsumexp(log w) - log N.
double log_z_estimate(double log_z_base, std::span<const double> log_weights);

}  // namespace varopt
