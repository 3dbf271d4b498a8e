#include "fxliq/rl_il.hpp"

#include "fxliq/neural/checkpoint.hpp"

#include <algorithm>
#include <limits>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace fxliq {

std::vector<Action> oracle_actions(const Episode& episode) {
  const int T = episode.horizon();
  std::vector<Action> out(static_cast<std::size_t>(T), Action::hold);
  double later_max = -std::numeric_limits<double>::infinity();
  for (int t = T - 1; t >= 0; --t) {
    const double x = episode.norm_rates(t);
    out[static_cast<std::size_t>(t)] = x >= later_max ? Action::sell : Action::hold;
    later_max = std::max(later_max, x);
  }
  return out;
}

// --- rewards -----------------------------------------------------------------

std::string to_string(RewardKind kind) {
  switch (kind) {
    case RewardKind::vanilla: return "vanilla";
    case RewardKind::ranking: return "ranking";
    case RewardKind::binary: return "binary";
  }
  return "unknown";
}

int reverse_rank(const Episode& episode, int t) {
  const double x = episode.norm_rates(t);
  return 1 + static_cast<int>((episode.norm_rates.array() < x).count());
}

double compute_reward(RewardKind kind, const Episode& episode, int t, Action action) {
  if (t < 0 || t >= episode.horizon()) throw std::out_of_range("compute_reward: t out of range");
  const double a = action == Action::sell ? 1.0 : 0.0;
  switch (kind) {
    case RewardKind::vanilla: return a * episode.norm_rates(t);
    case RewardKind::ranking: return a * reverse_rank(episode, t);
    case RewardKind::binary:
      return oracle_actions(episode)[static_cast<std::size_t>(t)] == action ? 1.0 : 0.0;
  }
  return 0.0;
}

// --- replay ------------------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer: capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 4096));
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<const ReplayBuffer::Transition*> ReplayBuffer::sample(std::size_t count,
                                                                  std::mt19937_64& rng) const {
  if (items_.empty()) throw std::logic_error("replay buffer: sampling from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<const Transition*> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(&items_[pick(rng)]);
  return out;
}

// --- DQN ---------------------------------------------------------------------

double epsilon_at(const DqnConfig& cfg, long step) {
  const double decay_steps = std::max(1.0, cfg.env_steps / 2.0);
  const double frac = std::min(1.0, static_cast<double>(step) / decay_steps);
  return cfg.epsilon_start + frac * (cfg.epsilon_end - cfg.epsilon_start);
}

Eigen::Vector2d QModel::q_values(const State& state) const {
  return net.forward(state_features(state, features));
}

QModel train_dqn(std::span<const Episode> episodes, const DqnConfig& cfg) {
  const int T = detail::common_horizon(episodes);
  const auto& tc = cfg.train;
  if (cfg.env_steps < 1) throw std::invalid_argument("train_dqn: env_steps must be positive");
  QModel model;
  model.reward = cfg.reward;
  model.features = tc.features;
  model.net = neural::Mlp<double>(neural::make_dims(tc.features.input_dim(), tc.hidden, 2), tc.seed);
  model.target = neural::TargetModel<double>(model.net);
  neural::AdamState<double> opt(model.net, tc.learning_rate);
  ReplayBuffer replay(cfg.replay_capacity);
  std::mt19937_64 rng(tc.seed ^ 0xd1b54a32d192ed03ULL);
  std::uniform_int_distribution<std::size_t> pick_episode(0, episodes.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const Episode* episode = nullptr;
  Eigen::MatrixXd features;
  std::vector<Action> oracle;
  int t = 0;
  auto start_episode = [&] {
    episode = &episodes[pick_episode(rng)];
    features = episode_features(*episode, tc.features, 0, T);
    oracle = oracle_actions(*episode);
    t = 0;
  };
  start_episode();

  const std::size_t batch_size = static_cast<std::size_t>(std::max(1, tc.batch_size));
  for (long step = 0; step < cfg.env_steps; ++step) {
    const Eigen::VectorXd s = features.col(t);
    int a = 0;
    if (unit(rng) < epsilon_at(cfg, step)) {
      a = unit(rng) < 0.5 ? 0 : 1;
    } else {
      const Eigen::VectorXd q = model.net.forward(s);
      a = q(1) > q(0) ? 1 : 0;
    }
    const Action action = a == 1 ? Action::sell : Action::hold;
    double r = cfg.reward == RewardKind::binary
                   ? (oracle[static_cast<std::size_t>(t)] == action ? 1.0 : 0.0)
                   : compute_reward(cfg.reward, *episode, t, action);
    if (cfg.balance_weighted) r *= static_cast<double>(t + 1);
    const bool done = action == Action::sell || t == T - 1;
    replay.push({s, done ? s : Eigen::VectorXd(features.col(t + 1)), a, r, done});
    if (done) {
      start_episode();
    } else {
      ++t;
    }

    if (replay.size() < static_cast<std::size_t>(std::max<long>(1, cfg.warmup))) continue;
    const auto batch = replay.sample(std::min(batch_size, replay.size()), rng);
    const auto n = static_cast<Eigen::Index>(batch.size());
    Eigen::MatrixXd states(tc.features.input_dim(), n), next(tc.features.input_dim(), n);
    for (Eigen::Index i = 0; i < n; ++i) {
      states.col(i) = batch[static_cast<std::size_t>(i)]->state;
      next.col(i) = batch[static_cast<std::size_t>(i)]->next_state;
    }
    const Eigen::MatrixXd q_now = model.net.forward_batch(states);
    const Eigen::MatrixXd q_next_online = model.net.forward_batch(next);
    const Eigen::MatrixXd q_next_target = model.target.net.forward_batch(next);
    std::vector<Eigen::VectorXd> targets;
    targets.reserve(batch.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& tr = *batch[static_cast<std::size_t>(i)];
      double y = tr.reward;
      if (!tr.done) {
        // Double DQN: online network picks, target network evaluates; no discount.
        const Eigen::Index best = q_next_online(1, i) > q_next_online(0, i) ? 1 : 0;
        y += q_next_target(best, i);
      }
      Eigen::VectorXd target = q_now.col(i);
      target(tr.action) = y;
      targets.push_back(std::move(target));
    }
    neural::train_step(model.net, opt, states, std::span<const Eigen::VectorXd>(targets),
                       neural::LossSpec::mse());
    if (++model.target.staleness >= tc.sync_every) neural::sync_target(model.net, model.target);
  }
  return model;
}

DecisionSignal dqn_decision(const QModel& model, const State& state) {
  const auto q = model.q_values(state);
  return {q(0) - q(1), "dqn-" + to_string(model.reward)};
}

// --- imitation ---------------------------------------------------------------

std::string to_string(ImitationVariant variant) {
  switch (variant) {
    case ImitationVariant::vanilla: return "vanilla";
    case ImitationVariant::downsample: return "downsample";
    case ImitationVariant::focal: return "focal";
  }
  return "unknown";
}

double ImitationModel::sell_probability(const State& state) const {
  return neural::sigmoid(net.forward(state_features(state, features))(0));
}

std::vector<Eigen::Index> balanced_epoch_indices(std::span<const int> labels, std::mt19937_64& rng) {
  std::vector<Eigen::Index> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (labels[i] ? pos : neg).push_back(static_cast<Eigen::Index>(i));
  if (pos.empty() || neg.empty()) throw std::invalid_argument("downsample: need both classes");
  auto& major = pos.size() > neg.size() ? pos : neg;
  const auto& minor = pos.size() > neg.size() ? neg : pos;
  std::shuffle(major.begin(), major.end(), rng);
  std::vector<Eigen::Index> order(minor.begin(), minor.end());
  order.insert(order.end(), major.begin(), major.begin() + static_cast<std::ptrdiff_t>(minor.size()));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

ImitationModel train_imitation(std::span<const Episode> episodes, const ImitationConfig& cfg) {
  const int T = detail::common_horizon(episodes);
  if (T < 2) throw std::invalid_argument("train_imitation: episodes need at least two steps");
  const auto& tc = cfg.train;
  // The last step is always a forced sale, so it carries no decision to imitate.
  const auto count = static_cast<Eigen::Index>(episodes.size()) * (T - 1);
  Eigen::MatrixXd inputs(tc.features.input_dim(), count);
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(count));
  Eigen::Index col = 0;
  for (const auto& e : episodes) {
    inputs.middleCols(col, T - 1) = episode_features(e, tc.features, 0, T - 1);
    col += T - 1;
    const auto oracle = oracle_actions(e);
    for (int t = 0; t + 1 < T; ++t) labels.push_back(oracle[static_cast<std::size_t>(t)] == Action::sell);
  }
  const auto sells = std::count(labels.begin(), labels.end(), 1);
  if (sells == 0 || sells == count)
    throw std::invalid_argument("train_imitation: oracle labels are all one class");

  ImitationModel model;
  model.variant = cfg.variant;
  model.features = tc.features;
  model.net = neural::Mlp<double>(neural::make_dims(tc.features.input_dim(), tc.hidden, 1), tc.seed);
  const auto loss = cfg.variant == ImitationVariant::focal ? neural::LossSpec::focal(cfg.focal_gamma)
                                                           : neural::LossSpec::cross_entropy();
  detail::EpochSampler sampler = detail::shuffled_sampler(count);
  if (cfg.variant == ImitationVariant::downsample)
    sampler = [&labels](std::mt19937_64& rng) {
      return balanced_epoch_indices(std::span<const int>(labels), rng);
    };
  const auto targets = [&](std::span<const Eigen::Index> idx) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(idx.size());
    for (auto i : idx)
      out.push_back(Eigen::VectorXd::Constant(1, labels[static_cast<std::size_t>(i)]));
    return out;
  };
  detail::fit(model.net, inputs, targets, loss, tc, sampler);
  return model;
}

DecisionSignal il_decision(const ImitationModel& model, const State& state) {
  return {0.5 - model.sell_probability(state), "il-" + to_string(model.variant)};
}

// --- estimators --------------------------------------------------------------

namespace {

class DqnEstimator final : public SignalEstimator {
 public:
  explicit DqnEstimator(QModel m) : model_(std::move(m)) {}
  std::string tag() const override { return "dqn-" + to_string(model_.reward); }
  Eigen::VectorXd signals(const Episode& e) const override {
    const Eigen::MatrixXd q = model_.net.forward_batch(episode_features(e, model_.features, 0, e.horizon()));
    return (q.row(0) - q.row(1)).transpose();
  }

 private:
  QModel model_;
};

class ImitationEstimator final : public SignalEstimator {
 public:
  explicit ImitationEstimator(ImitationModel m) : model_(std::move(m)) {}
  std::string tag() const override { return "il-" + to_string(model_.variant); }
  Eigen::VectorXd signals(const Episode& e) const override {
    const Eigen::RowVectorXd logits =
        model_.net.forward_batch(episode_features(e, model_.features, 0, e.horizon())).row(0);
    Eigen::VectorXd d(logits.size());
    for (Eigen::Index t = 0; t < logits.size(); ++t) d(t) = 0.5 - neural::sigmoid(logits(t));
    return d;
  }

 private:
  ImitationModel model_;
};

}  // namespace

EstimatorPtr make_estimator(QModel model) { return std::make_shared<DqnEstimator>(std::move(model)); }

EstimatorPtr make_estimator(ImitationModel model) {
  return std::make_shared<ImitationEstimator>(std::move(model));
}

// --- checkpoints -------------------------------------------------------------

void write_dqn(std::ostream& out, const QModel& model) {
  out << "dqn " << to_string(model.reward) << '\n';
  detail::write_features(out, model.features);
  neural::write_mlp(out, model.net);
}

QModel read_dqn(std::istream& in) {
  detail::expect_token(in, "dqn");
  std::string kind;
  in >> kind;
  QModel model;
  if (kind == "vanilla") model.reward = RewardKind::vanilla;
  else if (kind == "ranking") model.reward = RewardKind::ranking;
  else if (kind == "binary") model.reward = RewardKind::binary;
  else throw std::runtime_error("checkpoint: bad dqn reward kind '" + kind + "'");
  model.features = detail::read_features(in);
  model.net = neural::read_mlp(in);
  if (model.net.output_dim() != 2) throw std::runtime_error("checkpoint: dqn needs two outputs");
  model.target = neural::TargetModel<double>(model.net);
  return model;
}

void write_imitation(std::ostream& out, const ImitationModel& model) {
  out << "imitation " << to_string(model.variant) << '\n';
  detail::write_features(out, model.features);
  neural::write_mlp(out, model.net);
}

ImitationModel read_imitation(std::istream& in) {
  detail::expect_token(in, "imitation");
  std::string variant;
  in >> variant;
  ImitationModel model;
  if (variant == "vanilla") model.variant = ImitationVariant::vanilla;
  else if (variant == "downsample") model.variant = ImitationVariant::downsample;
  else if (variant == "focal") model.variant = ImitationVariant::focal;
  else throw std::runtime_error("checkpoint: bad imitation variant '" + variant + "'");
  model.features = detail::read_features(in);
  model.net = neural::read_mlp(in);
  return model;
}

}  // namespace fxliq
