#pragma once

#include "fxliq/market_data.hpp"

#include <Eigen/Dense>

#include <limits>
#include <memory>
#include <string>

namespace fxliq {

/// Network inputs carry rates as percent deviations from the episode's first rate.
inline constexpr double kRateScale = 100.0;

/// How a State becomes a network input: the past-n window, optionally t/T,
/// optionally the true next-m rates ("+ Actuals" augmentation).
struct FeatureSpec {
  int window = 10;
  bool time_input = false;
  int augment = 0;

  int input_dim() const { return window + (time_input ? 1 : 0) + augment; }
};

Eigen::VectorXd state_features(const State& state, const FeatureSpec& spec);

/// Features for steps [first, last) of an episode as columns.
Eigen::MatrixXd episode_features(const Episode& episode, const FeatureSpec& spec, int first,
                                 int last);

/// Decision returned at a step that must liquidate.
inline constexpr double kForcedSell = -std::numeric_limits<double>::infinity();

/// Anything that estimates d_t = (best achievable future rate) - (current rate).
class SignalEstimator {
 public:
  virtual ~SignalEstimator() = default;

  virtual std::string tag() const = 0;

  /// d_t for every t of the episode; entries may be kForcedSell.
  virtual Eigen::VectorXd signals(const Episode& episode) const = 0;

  double signal(const Episode& episode, int t) const { return signals(episode)(t); }
};

using EstimatorPtr = std::shared_ptr<const SignalEstimator>;

}  // namespace fxliq
