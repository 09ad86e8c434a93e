#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "varopt/rbm.hpp"
#include "varopt/oracle.hpp"
#include "varopt/rng.hpp"
#include "varopt/trainer.hpp"

namespace varopt::testing {

/// RBM with N(0, weight_scale^2) weights and N(0, bias_scale^2) biases.
inline RbmParams random_rbm(int n_visible, int n_hidden, double weight_scale,
                            double bias_scale, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd w(n_hidden, n_visible);
  Eigen::VectorXd a(n_hidden);
  Eigen::VectorXd b(n_visible);
  for (int i = 0; i < n_hidden; ++i)
    for (int j = 0; j < n_visible; ++j) w(i, j) = rng.normal(0.0, weight_scale);
  for (int i = 0; i < n_hidden; ++i) a[i] = rng.normal(0.0, bias_scale);
  for (int j = 0; j < n_visible; ++j) b[j] = rng.normal(0.0, bias_scale);
  return RbmParams(std::move(w), std::move(a), std::move(b));
}

inline GeometricPath uniform_base_path(const RbmParams& target) {
  return GeometricPath(RbmParams::zeros(target.n_visible(), 1), target);
}

/// PCD-trained model on the rows x cols bars patterns. Deterministic.
inline RbmParams desk_model(int rows, int cols, int n_hidden, std::uint64_t seed,
                            int epochs = 2000,
                            double learning_rate = 0.02) {
  TrainConfig cfg;
  cfg.algorithm = TrainAlgorithm::PCD;
  cfg.gibbs_steps = 1;
  cfg.learning_rate = learning_rate;
  cfg.epochs = epochs;
  cfg.batch_size = 4;
  cfg.seed = seed;
  Rng rng(seed);
  return train(bars_dataset(rows, cols), n_hidden, cfg, rng);
}

/// Noisy copies of one prototype (every third bit on), each bit flipped with
/// probability `flip`. A unimodal target on which Gibbs chains mix quickly.
inline BinaryDataset prototype_dataset(int n_visible, int n_rows, double flip,
                                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<VisibleState> rows;
  for (int n = 0; n < n_rows; ++n) {
    std::vector<int> bits(n_visible);
    for (int j = 0; j < n_visible; ++j) {
      const int proto = j % 3 == 0 ? 1 : 0;
      bits[j] = rng.bernoulli(flip) ? 1 - proto : proto;
    }
    rows.emplace_back(bits);
  }
  return BinaryDataset(std::move(rows));
}

/// PCD-trained 12-visible / 10-hidden model on `prototype_dataset`.
inline RbmParams prototype_model(std::uint64_t seed = 7) {
  TrainConfig cfg;
  cfg.algorithm = TrainAlgorithm::PCD;
  cfg.learning_rate = 0.1;
  cfg.epochs = 3000;
  cfg.batch_size = 10;
  cfg.seed = seed;
  Rng rng(seed);
  return train(prototype_dataset(12, 200, 0.02, 11), 10, cfg, rng);
}

/// Exact transition matrix of one systematic-scan heat-bath sweep over the
/// visible units at beta, built from log_pstar_beta alone. Row = from state.
inline std::vector<std::vector<double>> exact_sweep_kernel(const GeometricPath& path,
                                                           double beta) {
  const int d = path.n_visible();
  const std::uint64_t n = 1ULL << d;
  std::vector<double> lp(n);
  for (std::uint64_t s = 0; s < n; ++s)
    lp[s] = log_pstar_beta(VisibleState::from_index(s, d), beta, path);
  std::vector<std::vector<double>> kernel(n, std::vector<double>(n, 0.0));
  for (std::uint64_t s = 0; s < n; ++s) kernel[s][s] = 1.0;
  for (int j = 0; j < d; ++j) {
    std::vector<std::vector<double>> next(n, std::vector<double>(n, 0.0));
    for (std::uint64_t from = 0; from < n; ++from) {
      for (std::uint64_t mid = 0; mid < n; ++mid) {
        const double m = kernel[from][mid];
        if (m == 0.0) continue;
        const std::uint64_t on = mid | (1ULL << j);
        const std::uint64_t off = mid & ~(1ULL << j);
        const double p_on = 1.0 / (1.0 + std::exp(lp[off] - lp[on]));
        next[from][on] += m * p_on;
        next[from][off] += m * (1.0 - p_on);
      }
    }
    kernel = std::move(next);
  }
  return kernel;
}

/// One heat-bath sweep drawing the same uniforms as gibbs_transition, with
/// the conditionals taken from log_pstar_beta differences.
inline VisibleState reference_sweep(VisibleState v, double beta, const GeometricPath& path,
                                    Rng& rng) {
  for (int j = 0; j < v.size(); ++j) {
    VisibleState on = v, off = v;
    on.set(j, true);
    off.set(j, false);
    const double odds = log_pstar_beta(on, beta, path) - log_pstar_beta(off, beta, path);
    v.set(j, rng.uniform() < 1.0 / (1.0 + std::exp(-odds)));
  }
  return v;
}

/// Fraction of sweeps (from random starts) on which gibbs_transition and
/// reference_sweep land on different states under a shared stream.
inline double sweep_disagreement(const GeometricPath& path, double beta, int trials,
                                 std::uint64_t seed) {
  Rng starts(seed);
  int differ = 0;
  for (int t = 0; t < trials; ++t) {
    const VisibleState v = VisibleState::from_index(
        starts.below(1ULL << path.n_visible()), path.n_visible());
    Rng a = Rng::for_stream(seed, t);
    Rng b = a;
    if (gibbs_transition(v, beta, path, a).index() != reference_sweep(v, beta, path, b).index())
      ++differ;
  }
  return static_cast<double>(differ) / trials;
}

/// max_s |(p K)_s - p_s| for the exact p_beta.
inline double stationarity_error(const GeometricPath& path, double beta) {
  const auto kernel = exact_sweep_kernel(path, beta);
  const auto p = PathEnumeration(path).probabilities(beta);
  double worst = 0.0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    double acc = 0.0;
    for (std::size_t s = 0; s < p.size(); ++s) acc += p[s] * kernel[s][t];
    worst = std::max(worst, std::abs(acc - p[t]));
  }
  return worst;
}

}  // namespace varopt::testing
