#pragma once

#include "fxliq/features.hpp"
#include "fxliq/neural/mlp.hpp"
#include "fxliq/neural/train.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace fxliq {

/// Hyperparameters shared by every network-backed learner.
struct TrainConfig {
  FeatureSpec features;
  std::vector<int> hidden = neural::default_hidden();
  double learning_rate = 0.003;
  int batch_size = 128;
  int epochs = 30;
  int sync_every = 200;  // target-network cadence, in optimizer steps
  std::uint64_t seed = 0;
};

namespace detail {

/// Per-epoch visiting order of sample indices.
using EpochSampler = std::function<std::vector<Eigen::Index>(std::mt19937_64&)>;

EpochSampler shuffled_sampler(Eigen::Index count);

/// Builds the batch targets for the given sample indices.
using TargetFn = std::function<std::vector<Eigen::VectorXd>(std::span<const Eigen::Index>)>;

/// Minibatch Adam over `inputs` columns. `after_step` runs after every
/// optimizer step. Returns the mean loss of the final epoch.
double fit(neural::Mlp<double>& model, const Eigen::MatrixXd& inputs, const TargetFn& targets,
           const neural::LossSpec& loss, const TrainConfig& cfg, const EpochSampler& sampler,
           const std::function<void()>& after_step = {});

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m, std::span<const Eigen::Index> idx);

}  // namespace detail
}  // namespace fxliq
