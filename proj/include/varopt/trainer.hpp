#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "varopt/rbm.hpp"
#include "varopt/rng.hpp"

namespace varopt {

class BinaryDataset {
 public:
  /// Rejects an empty set, ragged rows and entries other than 0/1.
  explicit BinaryDataset(std::vector<VisibleState> rows);

  int n_visible() const { return rows_.front().size(); }
  int size() const { return static_cast<int>(rows_.size()); }
  const std::vector<VisibleState>& rows() const { return rows_; }

 private:
  std::vector<VisibleState> rows_;
};

/// Shifted-bars patterns on a rows x cols image: every single horizontal
/// and vertical bar plus every pair of adjacent parallel bars.
BinaryDataset bars_dataset(int rows, int cols);

enum class TrainAlgorithm { CD, PCD };

struct TrainConfig {
  TrainAlgorithm algorithm = TrainAlgorithm::PCD;
  int gibbs_steps = 1;
  double learning_rate = 0.05;
  int epochs = 100;
  int batch_size = 10;
  double l2 = 0.0;
  std::uint64_t seed = 0;
};

/// Initial parameters: weights ~ N(0, 0.01^2), zero biases.
RbmParams initial_params(int n_visible, int n_hidden, Rng& rng);

/// One gradient step from a positive batch and negative-phase visible states.
/// Both phases use hidden probabilities; L2 acts on the weights only.
RbmParams contrastive_update(const RbmParams& params,
                             const std::vector<VisibleState>& positive,
                             const std::vector<VisibleState>& negative,
                             double learning_rate, double l2);

/// One block-Gibbs step v -> h -> v' of the plain RBM, in place.
void rbm_gibbs_step(VisibleState& v, const RbmParams& params, Rng& rng);

/// Called after each epoch with the 1-based epoch index.
using EpochCallback = std::function<void(int, const RbmParams&)>;

/// CD-k or PCD stochastic gradient training. Throws NumericalFailure naming
/// the epoch if parameters become non-finite.
RbmParams train(const BinaryDataset& data, int n_hidden, const TrainConfig& config,
                Rng& rng, const EpochCallback& on_epoch = {});

}  // namespace varopt
