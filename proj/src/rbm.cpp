#include "varopt/rbm.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "varopt/error.hpp"
#include "varopt/numeric.hpp"

namespace varopt {

namespace {

void check_beta(double beta) {
  require(beta >= 0.0 && beta <= 1.0, "beta must lie in [0, 1], got " + std::to_string(beta));
}

void check_visible(const VisibleState& v, const RbmParams& params) {
  require(v.size() == params.n_visible(),
          "visible state has " + std::to_string(v.size()) + " units, model expects " +
              std::to_string(params.n_visible()));
}

double sum_softplus(const Eigen::VectorXd& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += softplus(x[i]);
  return s;
}

}  // namespace

RbmParams::RbmParams(Eigen::MatrixXd weights, Eigen::VectorXd hidden_bias,
                     Eigen::VectorXd visible_bias)
    : weights_(std::move(weights)),
      hidden_bias_(std::move(hidden_bias)),
      visible_bias_(std::move(visible_bias)) {
  require(visible_bias_.size() > 0, "RBM needs at least one visible unit");
  require(hidden_bias_.size() > 0, "RBM needs at least one hidden unit");
  require(weights_.rows() == hidden_bias_.size() && weights_.cols() == visible_bias_.size(),
          "weight matrix must be n_hidden x n_visible (" + std::to_string(hidden_bias_.size()) +
              " x " + std::to_string(visible_bias_.size()) + "), got " +
              std::to_string(weights_.rows()) + " x " + std::to_string(weights_.cols()));
  require(weights_.allFinite() && hidden_bias_.allFinite() && visible_bias_.allFinite(),
          "RBM parameters must be finite");
}

RbmParams RbmParams::zeros(int n_visible, int n_hidden) {
  require(n_visible > 0 && n_hidden > 0, "RBM dimensions must be positive");
  return RbmParams(Eigen::MatrixXd::Zero(n_hidden, n_visible), Eigen::VectorXd::Zero(n_hidden),
                   Eigen::VectorXd::Zero(n_visible));
}

RbmParams RbmParams::factorial(const Eigen::VectorXd& visible_bias, int n_hidden) {
  require(n_hidden > 0, "RBM dimensions must be positive");
  return RbmParams(Eigen::MatrixXd::Zero(n_hidden, visible_bias.size()),
                   Eigen::VectorXd::Zero(n_hidden), visible_bias);
}

bool RbmParams::operator==(const RbmParams& other) const {
  return weights_.rows() == other.weights_.rows() && weights_.cols() == other.weights_.cols() &&
         weights_ == other.weights_ && hidden_bias_ == other.hidden_bias_ &&
         visible_bias_ == other.visible_bias_;
}

VisibleState::VisibleState(Eigen::VectorXd bits) : bits_(std::move(bits)) {
  for (Eigen::Index j = 0; j < bits_.size(); ++j) {
    require(bits_[j] == 0.0 || bits_[j] == 1.0, "visible state entries must be 0 or 1");
  }
}

VisibleState::VisibleState(const std::vector<int>& bits) : bits_(bits.size()) {
  for (std::size_t j = 0; j < bits.size(); ++j) {
    require(bits[j] == 0 || bits[j] == 1, "visible state entries must be 0 or 1");
    bits_[static_cast<Eigen::Index>(j)] = bits[j];
  }
}

VisibleState VisibleState::from_index(std::uint64_t index, int n_visible) {
  require(n_visible > 0 && n_visible < 64, "from_index supports 1..63 units");
  Eigen::VectorXd bits(n_visible);
  for (int j = 0; j < n_visible; ++j) bits[j] = static_cast<double>((index >> j) & 1U);
  return VisibleState(std::move(bits));
}

std::uint64_t VisibleState::index() const {
  std::uint64_t idx = 0;
  for (Eigen::Index j = 0; j < bits_.size() && j < 64; ++j) {
    if (bits_[j] != 0.0) idx |= std::uint64_t{1} << j;
  }
  return idx;
}

GeometricPath::GeometricPath(RbmParams base, RbmParams target)
    : base_(std::move(base)), target_(std::move(target)) {
  require(base_.n_visible() == target_.n_visible(),
          "base and target must share the visible layer");
  require(base_.has_zero_weights(), "base model must have zero weights to be exactly sampleable");
  log_z_base_ = sum_softplus(base_.hidden_bias()) + sum_softplus(base_.visible_bias());
  if (target_.weights().cwiseAbs().maxCoeff() < 300.0) {
    exp_weights_ = target_.weights().array().exp();
    exp_neg_weights_ = (-target_.weights().array()).exp();
  }
}

double energy(const Eigen::VectorXd& hidden, const VisibleState& v, const RbmParams& params) {
  check_visible(v, params);
  require(hidden.size() == params.n_hidden(), "hidden state length does not match model");
  return -hidden.dot(params.weights() * v.bits()) - params.hidden_bias().dot(hidden) -
         params.visible_bias().dot(v.bits());
}

double log_pstar(const VisibleState& v, const RbmParams& params) {
  check_visible(v, params);
  const Eigen::VectorXd pre = params.hidden_bias() + params.weights() * v.bits();
  return params.visible_bias().dot(v.bits()) + sum_softplus(pre);
}

double log_pstar_beta(const VisibleState& v, double beta, const GeometricPath& path) {
  check_beta(beta);
  return (1.0 - beta) * log_pstar(v, path.base()) + beta * log_pstar(v, path.target());
}

double dlog_pstar_dbeta(const VisibleState& v, const GeometricPath& path) {
  return log_pstar(v, path.target()) - log_pstar(v, path.base());
}

double site_log_odds(const VisibleState& v, int j, double beta, const GeometricPath& path) {
  require(j >= 0 && j < v.size(), "site index out of range");
  VisibleState on = v;
  VisibleState off = v;
  on.set(j, true);
  off.set(j, false);
  return log_pstar_beta(on, beta, path) - log_pstar_beta(off, beta, path);
}

double prepare_sweep(const VisibleState& v, const GeometricPath& path, GibbsWorkspace& ws) {
  const RbmParams& a = path.base();
  const RbmParams& b = path.target();
  ws.target_pre.noalias() = b.weights() * v.bits();
  ws.target_pre += b.hidden_bias();
  // Base weights are zero, so log p*_A(v) = b_A^T v + sum_i softplus(a_A,i).
  const double log_base = a.visible_bias().dot(v.bits()) + sum_softplus(a.hidden_bias());
  return b.visible_bias().dot(v.bits()) + sum_softplus(ws.target_pre) - log_base;
}

// Heat-bath update of one visible unit at a time. With pre = a_B + W_B v the
// log-odds of v_j = 1 is
//   (1 - beta) b_A,j + beta (b_B,j + sum_i [softplus(pre_i|v_j=1) - softplus(pre_i|v_j=0)]),
// the base hidden units being decoupled from v. The softplus difference is
// log prod_i (1 + e^{pre_i|1}) / (1 + e^{pre_i|0}), tracked through
// exp(pre) so a site costs one log; large activations take the softplus form.
void gibbs_sweep(VisibleState& v, double beta, const GeometricPath& path, Rng& rng,
                 GibbsWorkspace& ws) {
  const RbmParams& a = path.base();
  const RbmParams& b = path.target();
  const Eigen::MatrixXd& w = b.weights();
  const Eigen::MatrixXd& ew = path.exp_target_weights();
  const Eigen::MatrixXd& enw = path.exp_neg_target_weights();
  const Eigen::Index m = b.n_hidden();
  constexpr double kFastLimit = 300.0;

  bool fast = ew.size() > 0 && ws.target_pre.cwiseAbs().maxCoeff() < kFastLimit;
  if (fast) ws.exp_pre = ws.target_pre.array().exp();

  for (int j = 0; j < v.size(); ++j) {
    const bool was_on = v[j] != 0.0;
    double log_ratio = std::numeric_limits<double>::quiet_NaN();
    if (fast) {
      double prod = 1.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double e = ws.exp_pre[i];
        prod *= was_on ? (1.0 + e) / (1.0 + e * enw(i, j)) : (1.0 + e * ew(i, j)) / (1.0 + e);
      }
      if (prod > 0.0 && std::isfinite(prod)) log_ratio = std::log(prod);
    }
    if (!std::isfinite(log_ratio)) {
      log_ratio = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double off = ws.target_pre[i] - (was_on ? w(i, j) : 0.0);
        log_ratio += softplus(off + w(i, j)) - softplus(off);
      }
    }
    const double log_odds =
        (1.0 - beta) * a.visible_bias()[j] + beta * (b.visible_bias()[j] + log_ratio);
    const bool now_on = rng.bernoulli(sigmoid(log_odds));
    if (now_on == was_on) continue;
    v.set(j, now_on);
    if (now_on) {
      ws.target_pre += w.col(j);
      if (fast) ws.exp_pre.array() *= ew.col(j).array();
    } else {
      ws.target_pre -= w.col(j);
      if (fast) ws.exp_pre.array() *= enw.col(j).array();
    }
    if (fast && ws.target_pre.cwiseAbs().maxCoeff() >= kFastLimit) fast = false;
  }
}

VisibleState gibbs_transition(const VisibleState& v, double beta, const GeometricPath& path,
                              Rng& rng) {
  check_beta(beta);
  check_visible(v, path.target());
  VisibleState next = v;
  GibbsWorkspace ws;
  prepare_sweep(next, path, ws);
  gibbs_sweep(next, beta, path, rng, ws);
  return next;
}

VisibleState sample_base(const GeometricPath& path, Rng& rng) {
  const RbmParams& a = path.base();
  require(a.has_zero_weights(), "base sampling requires zero base weights");
  Eigen::VectorXd bits(a.n_visible());
  for (int j = 0; j < a.n_visible(); ++j) {
    bits[j] = rng.bernoulli(sigmoid(a.visible_bias()[j])) ? 1.0 : 0.0;
  }
  return VisibleState(std::move(bits));
}

}  // namespace varopt
