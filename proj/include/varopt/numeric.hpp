#pragma once

#include <cmath>
#include <span>

namespace varopt {

/// log(1 + exp(x)) without overflow for large |x|.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(sum_i exp(x_i)). Returns -inf for an empty range or when every entry
/// is -inf.
double log_sum_exp(std::span<const double> x);

/// Unbiased (N-1 denominator) sample variance.
double sample_variance(std::span<const double> x);

}  // namespace varopt
