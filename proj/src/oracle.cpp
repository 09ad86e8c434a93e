#include "varopt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "varopt/error.hpp"
#include "varopt/numeric.hpp"

namespace varopt {

namespace {

void check_cap(int units, int cap, const char* layer) {
  if (units > cap) {
    throw EnumerationRefused(std::string("refusing to enumerate ") + std::to_string(units) + " " +
                             layer + " units (cap " + std::to_string(cap) + ")");
  }
}

// Running log-sum-exp so enumeration needs no 2^n buffer.
class LogAccumulator {
 public:
  void add(double x) {
    if (x <= max_) {
      sum_ += std::exp(x - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - x) + 1.0;
      max_ = x;
    }
  }
  double value() const { return max_ + std::log(sum_); }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
};

}  // namespace

double log_z_by_hidden(const RbmParams& params, int cap) {
  const int m = params.n_hidden();
  check_cap(m, cap, "hidden");
  const Eigen::MatrixXd wt = params.weights().transpose();
  LogAccumulator acc;
  Eigen::VectorXd h(m);
  Eigen::VectorXd pre(params.n_visible());
  for (std::uint64_t idx = 0; idx < (std::uint64_t{1} << m); ++idx) {
    for (int i = 0; i < m; ++i) h[i] = static_cast<double>((idx >> i) & 1U);
    pre.noalias() = wt * h;
    pre += params.visible_bias();
    double term = params.hidden_bias().dot(h);
    for (Eigen::Index j = 0; j < pre.size(); ++j) term += softplus(pre[j]);
    acc.add(term);
  }
  return acc.value();
}

double log_z_by_visible(const RbmParams& params, int cap) {
  const int d = params.n_visible();
  check_cap(d, cap, "visible");
  LogAccumulator acc;
  for (std::uint64_t idx = 0; idx < (std::uint64_t{1} << d); ++idx) {
    acc.add(log_pstar(VisibleState::from_index(idx, d), params));
  }
  return acc.value();
}

ExactSummary exact_log_z(const RbmParams& params, int cap) {
  ExactSummary s;
  s.n_visible = params.n_visible();
  s.n_hidden = params.n_hidden();
  if (std::min(s.n_visible, s.n_hidden) > cap) {
    throw EnumerationRefused("both layers exceed the enumeration cap of " + std::to_string(cap));
  }
  if (s.n_hidden <= s.n_visible) {
    s.method = EnumerationMethod::Hidden;
    s.log_z = log_z_by_hidden(params, cap);
  } else {
    s.method = EnumerationMethod::Visible;
    s.log_z = log_z_by_visible(params, cap);
  }
  return s;
}

PathEnumeration::PathEnumeration(const GeometricPath& path, int max_visible) {
  const int d = path.n_visible();
  check_cap(d, max_visible, "visible");
  const std::uint64_t n = std::uint64_t{1} << d;
  log_pstar_base_.resize(n);
  log_pstar_target_.resize(n);
  for (std::uint64_t idx = 0; idx < n; ++idx) {
    const VisibleState v = VisibleState::from_index(idx, d);
    log_pstar_base_[idx] = log_pstar(v, path.base());
    log_pstar_target_[idx] = log_pstar(v, path.target());
  }
}

std::vector<double> PathEnumeration::probabilities(double beta) const {
  require(beta >= 0.0 && beta <= 1.0, "beta must lie in [0, 1]");
  const std::size_t n = log_pstar_base_.size();
  std::vector<double> p(n);
  for (std::size_t s = 0; s < n; ++s) {
    p[s] = (1.0 - beta) * log_pstar_base_[s] + beta * log_pstar_target_[s];
  }
  const double lse = log_sum_exp(p);
  for (double& x : p) x = std::exp(x - lse);
  return p;
}

double PathEnumeration::log_z(double beta) const {
  require(beta >= 0.0 && beta <= 1.0, "beta must lie in [0, 1]");
  std::vector<double> l(log_pstar_base_.size());
  for (std::size_t s = 0; s < l.size(); ++s) {
    l[s] = (1.0 - beta) * log_pstar_base_[s] + beta * log_pstar_target_[s];
  }
  return log_sum_exp(l);
}

double PathEnumeration::g(double beta) const {
  const std::vector<double> p = probabilities(beta);
  double mean = 0.0;
  for (std::size_t s = 0; s < p.size(); ++s) {
    mean += p[s] * (log_pstar_target_[s] - log_pstar_base_[s]);
  }
  double var = 0.0;
  for (std::size_t s = 0; s < p.size(); ++s) {
    const double d = log_pstar_target_[s] - log_pstar_base_[s] - mean;
    var += p[s] * d * d;
  }
  return var;
}

double exact_g(const GeometricPath& path, double beta, int max_visible) {
  require(beta >= 0.0 && beta <= 1.0, "beta must lie in [0, 1]");
  return PathEnumeration(path, max_visible).g(beta);
}

double average_log_likelihood(const RbmParams& params, const std::vector<VisibleState>& rows,
                              int cap) {
  require(!rows.empty(), "log-likelihood of an empty dataset");
  const double log_z = exact_log_z(params, cap).log_z;
  double sum = 0.0;
  for (const auto& v : rows) sum += log_pstar(v, params);
  return sum / static_cast<double>(rows.size()) - log_z;
}

}  // namespace varopt
