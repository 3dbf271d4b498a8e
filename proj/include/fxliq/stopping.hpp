#pragma once

#include "fxliq/features.hpp"
#include "fxliq/learner_config.hpp"
#include "fxliq/market_data.hpp"
#include "fxliq/neural/mlp.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fxliq {

struct DecisionSignal {
  double d = 0.0;
  std::string source;
};

/// Exact backward recursion Y_{T-1} = X_{T-1}, Y_t = max(X_t, Y_{t+1}).
Eigen::VectorXd snell_envelope(const Eigen::Ref<const Eigen::VectorXd>& rates);

// ---------------------------------------------------------------------------
// Backward recursion with per-step regression.
// ---------------------------------------------------------------------------

/// One network per step t = 1..T-1; network t maps features at t-1 to an
/// estimate of the value at t.
struct BrrModel {
  int horizon = 0;
  FeatureSpec features;
  std::vector<neural::Mlp<double>> nets;  // nets[t - 1] is network t

  const neural::Mlp<double>& network(int t) const;
};

BrrModel train_brr(std::span<const Episode> episodes, const TrainConfig& cfg);
DecisionSignal brr_decision(const BrrModel& model, const State& state);

// ---------------------------------------------------------------------------
// Bootstrapped hold-value learners.
// ---------------------------------------------------------------------------

enum class HorizonMode { finite, infinite };

struct ValueModel {
  HorizonMode mode = HorizonMode::infinite;
  FeatureSpec features;  // time_input is true exactly in finite mode
  neural::Mlp<double> net;
  neural::TargetModel<double> target;

  double hold_value(const State& state) const;
};

/// Hold-value regression onto max{h(s'), V_target(s')}; the bootstrap term is
/// zero on transitions into an episode's last step.
ValueModel train_value(std::span<const Episode> episodes, HorizonMode mode, TrainConfig cfg);
DecisionSignal value_decision(const ValueModel& model, const State& state);

/// Learns only Q(s, hold); Q(s, sell) is the current rate by definition.
struct QStoppingModel {
  FeatureSpec features;
  neural::Mlp<double> net;
  neural::TargetModel<double> target;

  double hold_q(const State& state) const;
};

QStoppingModel train_q_stopping(std::span<const Episode> episodes, TrainConfig cfg);
DecisionSignal q_stopping_decision(const QStoppingModel& model, const State& state);

EstimatorPtr make_estimator(BrrModel model);
EstimatorPtr make_estimator(ValueModel model);
EstimatorPtr make_estimator(QStoppingModel model);

void write_brr(std::ostream& out, const BrrModel& model);
BrrModel read_brr(std::istream& in);
void write_value(std::ostream& out, const ValueModel& model);
ValueModel read_value(std::istream& in);
void write_q_stopping(std::ostream& out, const QStoppingModel& model);
QStoppingModel read_q_stopping(std::istream& in);

namespace detail {
int common_horizon(std::span<const Episode> episodes);
void write_features(std::ostream& out, const FeatureSpec& spec);
FeatureSpec read_features(std::istream& in);
void expect_token(std::istream& in, const std::string& token);
}  // namespace detail

}  // namespace fxliq
