#pragma once

#include "fxliq/features.hpp"
#include "fxliq/learner_config.hpp"
#include "fxliq/market_data.hpp"
#include "fxliq/stopping.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <span>

namespace fxliq {

/// The J = min(K, T-1-t) largest rates after t, descending.
struct TopKTargets {
  Eigen::VectorXd values;

  int count() const { return static_cast<int>(values.size()); }
  double mean() const { return values.mean(); }
};

TopKTargets topk_targets(const Episode& episode, int t, int k);

/// K regression heads; head k estimates the k-th largest future rate.
struct TopKModel {
  int k = 1;
  FeatureSpec features;
  neural::Mlp<double> net;

  /// Mean of the K heads, the estimate of the average of the top-K future rates.
  double w_hat(const State& state) const;
};

/// Last-epoch mean losses are reported through `final_loss` when non-null.
TopKModel train_topk(std::span<const Episode> episodes, int k, const TrainConfig& cfg,
                     double* final_loss = nullptr);

/// Single-output regression onto the maximum future rate with plain mse.
TopKModel train_max_regression(std::span<const Episode> episodes, const TrainConfig& cfg,
                               double* final_loss = nullptr);

DecisionSignal topk_decision(const TopKModel& model, const State& state);

EstimatorPtr make_estimator(TopKModel model);

void write_topk(std::ostream& out, const TopKModel& model);
TopKModel read_topk(std::istream& in);

}  // namespace fxliq
