#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "varopt/rng.hpp"

namespace varopt {

/// Parameters of a binary RBM, theta = {W, a, b}.
///
/// `weights` is M x D (row i holds the couplings of hidden unit i),
/// `hidden_bias` has length M and `visible_bias` length D. Immutable once
/// constructed; the constructor rejects inconsistent shapes and non-finite
/// entries.
class RbmParams {
 public:
  RbmParams(Eigen::MatrixXd weights, Eigen::VectorXd hidden_bias,
            Eigen::VectorXd visible_bias);

  /// All-zero parameters (a uniform model).
  static RbmParams zeros(int n_visible, int n_hidden);

  /// Zero weights and hidden biases with the given visible biases.
  static RbmParams factorial(const Eigen::VectorXd& visible_bias, int n_hidden);

  int n_visible() const { return static_cast<int>(visible_bias_.size()); }
  int n_hidden() const { return static_cast<int>(hidden_bias_.size()); }

  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& hidden_bias() const { return hidden_bias_; }
  const Eigen::VectorXd& visible_bias() const { return visible_bias_; }

  bool has_zero_weights() const { return (weights_.array() == 0.0).all(); }

  bool operator==(const RbmParams& other) const;

 private:
  Eigen::MatrixXd weights_;
  Eigen::VectorXd hidden_bias_;
  Eigen::VectorXd visible_bias_;
};

/// A visible configuration v in {0,1}^D, stored as doubles so it can enter
/// matrix products directly.
class VisibleState {
 public:
  explicit VisibleState(Eigen::VectorXd bits);
  explicit VisibleState(const std::vector<int>& bits);

  /// State whose bit j is bit j of `index` (enumeration order).
  static VisibleState from_index(std::uint64_t index, int n_visible);

  int size() const { return static_cast<int>(bits_.size()); }
  const Eigen::VectorXd& bits() const { return bits_; }
  std::uint64_t index() const;

  double operator[](int j) const { return bits_[j]; }
  void set(int j, bool on) { bits_[j] = on ? 1.0 : 0.0; }

 private:
  Eigen::VectorXd bits_;
};

/// Geometric annealing path log p*_beta = (1-beta) log p*_A + beta log p*_B
/// between a factorial base (zero weights, exactly sampleable) and a target.
class GeometricPath {
 public:
  GeometricPath(RbmParams base, RbmParams target);

  const RbmParams& base() const { return base_; }
  const RbmParams& target() const { return target_; }
  int n_visible() const { return base_.n_visible(); }

  /// Exact log Z_A of the factorial base:
  /// sum_i softplus(a_A,i) + sum_j softplus(b_A,j).
  double log_z_base() const { return log_z_base_; }

  /// exp(W_B) and exp(-W_B), cached for the sampler. Empty when some
  /// |W_B,ij| is too large for the multiplicative update.
  const Eigen::MatrixXd& exp_target_weights() const { return exp_weights_; }
  const Eigen::MatrixXd& exp_neg_target_weights() const { return exp_neg_weights_; }

 private:
  RbmParams base_;
  RbmParams target_;
  double log_z_base_;
  Eigen::MatrixXd exp_weights_;
  Eigen::MatrixXd exp_neg_weights_;
};

/// E(h, v) = -v^T W^T h - a^T h - b^T v.
double energy(const Eigen::VectorXd& hidden, const VisibleState& v,
              const RbmParams& params);

/// log sum_h exp(-E(h, v)) = b^T v + sum_i softplus(a_i + (W v)_i).
double log_pstar(const VisibleState& v, const RbmParams& params);

double log_pstar_beta(const VisibleState& v, double beta, const GeometricPath& path);

/// d/dbeta log p*_beta(v) = log p*_B(v) - log p*_A(v); constant in beta.
double dlog_pstar_dbeta(const VisibleState& v, const GeometricPath& path);

/// log p_beta(v_j = 1 | v_rest) - log p_beta(v_j = 0 | v_rest), evaluated
/// directly from log_pstar_beta. Reference for the sampler's fast path.
double site_log_odds(const VisibleState& v, int j, double beta, const GeometricPath& path);

/// Scratch buffers reused across sweeps of one chain.
struct GibbsWorkspace {
  Eigen::VectorXd target_pre;  // a_B + W_B v
  Eigen::VectorXd exp_pre;     // exp(target_pre)
};

/// Fills `ws.target_pre` for state `v` and returns dlog_pstar_dbeta(v).
/// The activation is reused by the following `gibbs_sweep`.
double prepare_sweep(const VisibleState& v, const GeometricPath& path,
                     GibbsWorkspace& ws);

/// One systematic-scan Gibbs sweep over the visible units, each resampled
/// from its exact conditional under p_beta, applied in place. Requires
/// `prepare_sweep` to have been called on the current `v`; leaves
/// `ws.target_pre` consistent with the new state.
void gibbs_sweep(VisibleState& v, double beta, const GeometricPath& path, Rng& rng,
                 GibbsWorkspace& ws);

VisibleState gibbs_transition(const VisibleState& v, double beta,
                              const GeometricPath& path, Rng& rng);

/// Exact draw from the factorial base: v_j ~ Bernoulli(sigmoid(b_A,j)).
VisibleState sample_base(const GeometricPath& path, Rng& rng);

}  // namespace varopt
