#include "varopt/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "varopt/error.hpp"
#include "varopt/numeric.hpp"

namespace varopt {

namespace {

struct Moments {
  Eigen::MatrixXd vh;  // M x D, sum of p(h|v) v^T
  Eigen::VectorXd h;
  Eigen::VectorXd v;
};

Moments accumulate(const Eigen::MatrixXd& w, const Eigen::VectorXd& a,
                   const std::vector<VisibleState>& batch) {
  Moments m{Eigen::MatrixXd::Zero(w.rows(), w.cols()), Eigen::VectorXd::Zero(w.rows()),
            Eigen::VectorXd::Zero(w.cols())};
  Eigen::VectorXd ph(w.rows());
  for (const auto& v : batch) {
    ph.noalias() = w * v.bits();
    ph += a;
    for (Eigen::Index i = 0; i < ph.size(); ++i) ph[i] = sigmoid(ph[i]);
    m.vh.noalias() += ph * v.bits().transpose();
    m.h += ph;
    m.v += v.bits();
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  m.vh *= inv;
  m.h *= inv;
  m.v *= inv;
  return m;
}

void apply_update(Eigen::MatrixXd& w, Eigen::VectorXd& a, Eigen::VectorXd& b,
                  const std::vector<VisibleState>& positive,
                  const std::vector<VisibleState>& negative, double lr, double l2) {
  const Moments pos = accumulate(w, a, positive);
  const Moments neg = accumulate(w, a, negative);
  w += lr * (pos.vh - neg.vh - l2 * w);
  a += lr * (pos.h - neg.h);
  b += lr * (pos.v - neg.v);
}

void gibbs_step(VisibleState& v, const Eigen::MatrixXd& w, const Eigen::VectorXd& a,
                const Eigen::VectorXd& b, Rng& rng) {
  Eigen::VectorXd h = w * v.bits() + a;
  for (Eigen::Index i = 0; i < h.size(); ++i) h[i] = rng.bernoulli(sigmoid(h[i])) ? 1.0 : 0.0;
  const Eigen::VectorXd pre = w.transpose() * h + b;
  for (int j = 0; j < v.size(); ++j) v.set(j, rng.bernoulli(sigmoid(pre[j])));
}

}  // namespace

BinaryDataset::BinaryDataset(std::vector<VisibleState> rows) : rows_(std::move(rows)) {
  require(!rows_.empty(), "dataset must not be empty");
  const int d = rows_.front().size();
  require(d > 0, "dataset rows must not be empty");
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    require(rows_[r].size() == d, "dataset row " + std::to_string(r) + " has " +
                                      std::to_string(rows_[r].size()) + " entries, expected " +
                                      std::to_string(d));
  }
}

BinaryDataset bars_dataset(int rows, int cols) {
  require(rows >= 1 && cols >= 1, "bars image must be at least 1 x 1");
  const int d = rows * cols;
  std::vector<VisibleState> out;
  auto add = [&](auto&& on) {
    Eigen::VectorXd bits(d);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) bits[r * cols + c] = on(r, c) ? 1.0 : 0.0;
    out.emplace_back(std::move(bits));
  };
  for (int r = 0; r < rows; ++r) add([r](int rr, int) { return rr == r; });
  for (int c = 0; c < cols; ++c) add([c](int, int cc) { return cc == c; });
  for (int r = 0; r + 1 < rows; ++r) add([r](int rr, int) { return rr == r || rr == r + 1; });
  for (int c = 0; c + 1 < cols; ++c) add([c](int, int cc) { return cc == c || cc == c + 1; });
  return BinaryDataset(std::move(out));
}

RbmParams initial_params(int n_visible, int n_hidden, Rng& rng) {
  require(n_visible >= 1 && n_hidden >= 1, "RBM dimensions must be positive");
  Eigen::MatrixXd w(n_hidden, n_visible);
  for (int i = 0; i < n_hidden; ++i)
    for (int j = 0; j < n_visible; ++j) w(i, j) = rng.normal(0.0, 0.01);
  return RbmParams(std::move(w), Eigen::VectorXd::Zero(n_hidden),
                   Eigen::VectorXd::Zero(n_visible));
}

RbmParams contrastive_update(const RbmParams& params, const std::vector<VisibleState>& positive,
                             const std::vector<VisibleState>& negative, double learning_rate,
                             double l2) {
  require(!positive.empty() && !negative.empty(), "update needs nonempty phases");
  Eigen::MatrixXd w = params.weights();
  Eigen::VectorXd a = params.hidden_bias();
  Eigen::VectorXd b = params.visible_bias();
  apply_update(w, a, b, positive, negative, learning_rate, l2);
  return RbmParams(std::move(w), std::move(a), std::move(b));
}

void rbm_gibbs_step(VisibleState& v, const RbmParams& params, Rng& rng) {
  require(v.size() == params.n_visible(), "state length does not match model");
  gibbs_step(v, params.weights(), params.hidden_bias(), params.visible_bias(), rng);
}

RbmParams train(const BinaryDataset& data, int n_hidden, const TrainConfig& config, Rng& rng,
                const EpochCallback& on_epoch) {
  require(n_hidden >= 1, "n_hidden must be at least 1");
  require(config.gibbs_steps >= 1, "gibbs_steps must be at least 1");
  require(config.learning_rate >= 0.0, "learning rate must be nonnegative");
  require(config.epochs >= 1, "epochs must be at least 1");
  require(config.batch_size >= 1, "batch size must be at least 1");
  require(config.l2 >= 0.0, "l2 must be nonnegative");

  const RbmParams init = initial_params(data.n_visible(), n_hidden, rng);
  Eigen::MatrixXd w = init.weights();
  Eigen::VectorXd a = init.hidden_bias();
  Eigen::VectorXd b = init.visible_bias();

  const auto& rows = data.rows();
  const int n = data.size();
  const int batch = std::min(config.batch_size, n);

  std::vector<VisibleState> chains;
  if (config.algorithm == TrainAlgorithm::PCD) {
    for (int c = 0; c < batch; ++c) chains.push_back(rows[rng.below(n)]);
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<VisibleState> positive;
  std::vector<VisibleState> negative;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i) {
      std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    }
    for (int start = 0; start < n; start += batch) {
      const int stop = std::min(n, start + batch);
      positive.clear();
      for (int r = start; r < stop; ++r) positive.push_back(rows[order[r]]);
      if (config.algorithm == TrainAlgorithm::PCD) {
        for (auto& v : chains)
          for (int s = 0; s < config.gibbs_steps; ++s) gibbs_step(v, w, a, b, rng);
        negative = chains;
      } else {
        negative = positive;
        for (auto& v : negative)
          for (int s = 0; s < config.gibbs_steps; ++s) gibbs_step(v, w, a, b, rng);
      }
      apply_update(w, a, b, positive, negative, config.learning_rate, config.l2);
    }
    if (!w.allFinite() || !a.allFinite() || !b.allFinite()) {
      throw NumericalFailure("training diverged at epoch " + std::to_string(epoch));
    }
    if (on_epoch) on_epoch(epoch, RbmParams(w, a, b));
  }
  return RbmParams(std::move(w), std::move(a), std::move(b));
}

}  // namespace varopt
