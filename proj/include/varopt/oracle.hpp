#pragma once

#include <cstdint>
#include <vector>

#include "varopt/rbm.hpp"

namespace varopt {

enum class EnumerationMethod { Hidden, Visible };

struct ExactSummary {
  double log_z = 0.0;
  int n_visible = 0;
  int n_hidden = 0;
  EnumerationMethod method = EnumerationMethod::Hidden;
};

constexpr int kDefaultEnumerationCap = 20;

/// Exact log Z by summing over the smaller layer. Throws EnumerationRefused
/// if both layers exceed `cap` units.
ExactSummary exact_log_z(const RbmParams& params, int cap = kDefaultEnumerationCap);

/// log Z = logsumexp_h [a^T h + sum_j softplus(b_j + (W^T h)_j)].
double log_z_by_hidden(const RbmParams& params, int cap = kDefaultEnumerationCap);
/// log Z = logsumexp_v log_pstar(v).
double log_z_by_visible(const RbmParams& params, int cap = kDefaultEnumerationCap);

/// Exact distributions along a geometric path by enumerating {0,1}^D.
/// log p*_A and log p*_B are tabulated once, so querying many betas is
/// O(2^D) each.
class PathEnumeration {
 public:
  explicit PathEnumeration(const GeometricPath& path, int max_visible = 16);

  std::uint64_t n_states() const { return log_pstar_base_.size(); }

  /// Normalized p_beta over states in VisibleState::from_index order.
  std::vector<double> probabilities(double beta) const;
  double log_z(double beta) const;
  /// Var_beta[log p*_B - log p*_A].
  double g(double beta) const;

  const std::vector<double>& log_pstar_base() const { return log_pstar_base_; }
  const std::vector<double>& log_pstar_target() const { return log_pstar_target_; }

 private:
  std::vector<double> log_pstar_base_;
  std::vector<double> log_pstar_target_;
};

/// g(beta) = Var_beta[d/dbeta log p*_beta(v)] by full enumeration.
double exact_g(const GeometricPath& path, double beta, int max_visible = 16);

/// Mean log p(v) of the rows under `params`, using the exact partition
/// function.
double average_log_likelihood(const RbmParams& params,
                              const std::vector<VisibleState>& rows,
                              int cap = kDefaultEnumerationCap);

}  // namespace varopt
