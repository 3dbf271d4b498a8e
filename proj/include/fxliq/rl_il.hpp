#pragma once

#include "fxliq/action.hpp"
#include "fxliq/features.hpp"
#include "fxliq/learner_config.hpp"
#include "fxliq/market_data.hpp"
#include "fxliq/stopping.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace fxliq {

/// Sell at t iff the rate is >= every later rate; always sell at the last step.
std::vector<Action> oracle_actions(const Episode& episode);

// ---------------------------------------------------------------------------
// DQN
// ---------------------------------------------------------------------------

enum class RewardKind { vanilla, ranking, binary };
std::string to_string(RewardKind kind);

/// Reverse rank of norm_rates[t] within the episode: the largest rate gets T.
int reverse_rank(const Episode& episode, int t);

/// vanilla: a * X_t; ranking: a * reverse_rank; binary: 1 iff the action matches the oracle.
double compute_reward(RewardKind kind, const Episode& episode, int t, Action action);

struct DqnConfig {
  TrainConfig train;
  RewardKind reward = RewardKind::vanilla;
  long env_steps = 30000;
  long warmup = 1000;
  std::size_t replay_capacity = 50000;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  /// Scale the reward by the accumulated balance (t + 1 units since the start).
  bool balance_weighted = false;
};

/// Q(s, hold) and Q(s, sell) as outputs 0 and 1.
struct QModel {
  RewardKind reward = RewardKind::vanilla;
  FeatureSpec features;
  neural::Mlp<double> net;
  neural::TargetModel<double> target;

  Eigen::Vector2d q_values(const State& state) const;
};

/// Linear decay from start to end over the first half of training, then flat.
double epsilon_at(const DqnConfig& cfg, long step);

/// Uniform-sampling ring buffer of transitions.
class ReplayBuffer {
 public:
  struct Transition {
    Eigen::VectorXd state;
    Eigen::VectorXd next_state;
    int action = 0;
    double reward = 0.0;
    bool done = false;
  };

  explicit ReplayBuffer(std::size_t capacity);
  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::vector<const Transition*> sample(std::size_t count, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

QModel train_dqn(std::span<const Episode> episodes, const DqnConfig& cfg);
DecisionSignal dqn_decision(const QModel& model, const State& state);

// ---------------------------------------------------------------------------
// Imitation of the oracle
// ---------------------------------------------------------------------------

enum class ImitationVariant { vanilla, downsample, focal };
std::string to_string(ImitationVariant variant);

struct ImitationConfig {
  TrainConfig train;
  ImitationVariant variant = ImitationVariant::vanilla;
  double focal_gamma = 2.0;
};

/// One logistic output: probability of Sell.
struct ImitationModel {
  ImitationVariant variant = ImitationVariant::vanilla;
  FeatureSpec features;
  neural::Mlp<double> net;

  double sell_probability(const State& state) const;
};

/// Epoch order with the majority class subsampled to the minority count.
std::vector<Eigen::Index> balanced_epoch_indices(std::span<const int> labels, std::mt19937_64& rng);

ImitationModel train_imitation(std::span<const Episode> episodes, const ImitationConfig& cfg);
DecisionSignal il_decision(const ImitationModel& model, const State& state);

EstimatorPtr make_estimator(QModel model);
EstimatorPtr make_estimator(ImitationModel model);

void write_dqn(std::ostream& out, const QModel& model);
QModel read_dqn(std::istream& in);
void write_imitation(std::ostream& out, const ImitationModel& model);
ImitationModel read_imitation(std::istream& in);

}  // namespace fxliq
