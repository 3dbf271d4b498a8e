#include "fxliq/learner_config.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace fxliq::detail {

EpochSampler shuffled_sampler(Eigen::Index count) {
  return [count](std::mt19937_64& rng) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(count));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    return order;
  };
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m, std::span<const Eigen::Index> idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(idx[i]);
  return out;
}

double fit(neural::Mlp<double>& model, const Eigen::MatrixXd& inputs, const TargetFn& targets,
           const neural::LossSpec& loss, const TrainConfig& cfg, const EpochSampler& sampler,
           const std::function<void()>& after_step) {
  if (inputs.cols() == 0) throw std::invalid_argument("fit: empty training set");
  if (cfg.batch_size < 1 || cfg.epochs < 1)
    throw std::invalid_argument("fit: batch size and epochs must be positive");
  neural::AdamState<double> opt(model, cfg.learning_rate);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  double epoch_loss = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = sampler(rng);
    if (order.empty()) throw std::invalid_argument("fit: sampler produced an empty epoch");
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      const std::span<const Eigen::Index> idx(order.data() + begin, end - begin);
      const auto batch_targets = targets(idx);
      total += neural::train_step(model, opt, gather_columns(inputs, idx),
                                  std::span<const Eigen::VectorXd>(batch_targets), loss);
      ++batches;
      if (after_step) after_step();
    }
    epoch_loss = total / static_cast<double>(batches);
  }
  return epoch_loss;
}

}  // namespace fxliq::detail
