#include "fxliq/stopping.hpp"

#include "fxliq/neural/checkpoint.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace fxliq {

namespace detail {

int common_horizon(std::span<const Episode> episodes) {
  if (episodes.empty()) throw std::invalid_argument("training: empty training set");
  const int T = episodes.front().horizon();
  for (const auto& e : episodes)
    if (e.horizon() != T) throw std::invalid_argument("training: episodes differ in length");
  return T;
}

void write_features(std::ostream& out, const FeatureSpec& spec) {
  out << "features " << spec.window << ' ' << (spec.time_input ? 1 : 0) << ' ' << spec.augment
      << '\n';
}

FeatureSpec read_features(std::istream& in) {
  expect_token(in, "features");
  FeatureSpec spec;
  int time = 0;
  if (!(in >> spec.window >> time >> spec.augment) || spec.window < 1 || spec.augment < 0)
    throw std::runtime_error("checkpoint: bad features line");
  spec.time_input = time != 0;
  return spec;
}

void expect_token(std::istream& in, const std::string& token) {
  std::string got;
  if (!(in >> got) || got != token)
    throw std::runtime_error("checkpoint: expected '" + token + "', got '" + got + "'");
}

}  // namespace detail

Eigen::VectorXd snell_envelope(const Eigen::Ref<const Eigen::VectorXd>& rates) {
  const Eigen::Index T = rates.size();
  Eigen::VectorXd y(T);
  if (T == 0) return y;
  y(T - 1) = rates(T - 1);
  for (Eigen::Index t = T - 1; t-- > 0;) y(t) = std::max(rates(t), y(t + 1));
  return y;
}

// --- backward recursion ----------------------------------------------------

const neural::Mlp<double>& BrrModel::network(int t) const {
  if (t < 1 || t > static_cast<int>(nets.size()))
    throw std::out_of_range("brr: no network for step " + std::to_string(t));
  return nets[static_cast<std::size_t>(t - 1)];
}

BrrModel train_brr(std::span<const Episode> episodes, const TrainConfig& cfg) {
  const int T = detail::common_horizon(episodes);
  const auto n = static_cast<Eigen::Index>(episodes.size());
  BrrModel model;
  model.horizon = T;
  model.features = cfg.features;
  model.nets.resize(static_cast<std::size_t>(T - 1));

  // features[t] holds f_t for every episode.
  std::vector<Eigen::MatrixXd> features(static_cast<std::size_t>(T - 1));
  for (int t = 0; t < T - 1; ++t) {
    features[static_cast<std::size_t>(t)].resize(cfg.features.input_dim(), n);
    for (Eigen::Index e = 0; e < n; ++e)
      features[static_cast<std::size_t>(t)].col(e) = state_features(
          make_state(episodes[static_cast<std::size_t>(e)], t, cfg.features.window, cfg.features.augment),
          cfg.features);
  }

  for (int t = T - 1; t >= 1; --t) {
    Eigen::VectorXd target(n);
    for (Eigen::Index e = 0; e < n; ++e) target(e) = episodes[static_cast<std::size_t>(e)].norm_rates(t);
    if (t < T - 1) {
      const Eigen::RowVectorXd next =
          model.network(t + 1).forward_batch(features[static_cast<std::size_t>(t)]).row(0);
      target = target.cwiseMax(next.transpose());
    }
    TrainConfig step_cfg = cfg;
    step_cfg.seed = cfg.seed + static_cast<std::uint64_t>(t);
    neural::Mlp<double> net(neural::make_dims(cfg.features.input_dim(), cfg.hidden, 1), step_cfg.seed);
    const auto targets = [&](std::span<const Eigen::Index> idx) {
      std::vector<Eigen::VectorXd> out;
      out.reserve(idx.size());
      for (auto i : idx) out.push_back(Eigen::VectorXd::Constant(1, target(i)));
      return out;
    };
    detail::fit(net, features[static_cast<std::size_t>(t - 1)], targets, neural::LossSpec::mse(),
                step_cfg, detail::shuffled_sampler(n));
    model.nets[static_cast<std::size_t>(t - 1)] = std::move(net);
  }
  return model;
}

DecisionSignal brr_decision(const BrrModel& model, const State& state) {
  if (state.time_index >= model.horizon - 1) return {kForcedSell, "brr"};
  const auto f = state_features(state, model.features);
  return {model.network(state.time_index + 1).forward(f)(0) - state.current_rate, "brr"};
}

// --- bootstrapped value learners -------------------------------------------

namespace {

struct BootstrapFit {
  neural::Mlp<double> net;
  neural::TargetModel<double> target;
};

BootstrapFit fit_bootstrapped(std::span<const Episode> episodes, const TrainConfig& cfg) {
  const int T = detail::common_horizon(episodes);
  if (T < 2) throw std::invalid_argument("value training: episodes need at least two steps");
  const auto per_episode = static_cast<Eigen::Index>(T - 1);
  const auto count = per_episode * static_cast<Eigen::Index>(episodes.size());
  const int dim = cfg.features.input_dim();
  Eigen::MatrixXd inputs(dim, count), next_inputs(dim, count);
  Eigen::VectorXd next_rate(count);
  std::vector<char> terminal(static_cast<std::size_t>(count));
  Eigen::Index col = 0;
  for (const auto& e : episodes) {
    const Eigen::MatrixXd f = episode_features(e, cfg.features, 0, T);
    for (int t = 0; t + 1 < T; ++t, ++col) {
      inputs.col(col) = f.col(t);
      next_inputs.col(col) = f.col(t + 1);
      next_rate(col) = e.norm_rates(t + 1);
      terminal[static_cast<std::size_t>(col)] = (t + 1 == T - 1);
    }
  }

  BootstrapFit out;
  out.net = neural::Mlp<double>(neural::make_dims(dim, cfg.hidden, 1), cfg.seed);
  out.target = neural::TargetModel<double>(out.net);
  const auto targets = [&](std::span<const Eigen::Index> idx) {
    const Eigen::MatrixXd next = detail::gather_columns(next_inputs, idx);
    const Eigen::RowVectorXd boot = out.target.net.forward_batch(next).row(0);
    std::vector<Eigen::VectorXd> y;
    y.reserve(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const double continuation = terminal[static_cast<std::size_t>(idx[i])]
                                      ? 0.0
                                      : boot(static_cast<Eigen::Index>(i));
      y.push_back(Eigen::VectorXd::Constant(1, std::max(next_rate(idx[i]), continuation)));
    }
    return y;
  };
  const auto after_step = [&] {
    if (++out.target.staleness >= cfg.sync_every) neural::sync_target(out.net, out.target);
    if (out.target.staleness >= cfg.sync_every) throw std::logic_error("target network went stale");
  };
  detail::fit(out.net, inputs, targets, neural::LossSpec::mse(), cfg,
              detail::shuffled_sampler(count), after_step);
  return out;
}

}  // namespace

double ValueModel::hold_value(const State& state) const {
  return net.forward(state_features(state, features))(0);
}

ValueModel train_value(std::span<const Episode> episodes, HorizonMode mode, TrainConfig cfg) {
  cfg.features.time_input = (mode == HorizonMode::finite);
  auto fitted = fit_bootstrapped(episodes, cfg);
  return {mode, cfg.features, std::move(fitted.net), std::move(fitted.target)};
}

DecisionSignal value_decision(const ValueModel& model, const State& state) {
  return {model.hold_value(state) - state.current_rate,
          model.mode == HorizonMode::finite ? "dp-finite" : "dp-infinite"};
}

double QStoppingModel::hold_q(const State& state) const {
  return net.forward(state_features(state, features))(0);
}

QStoppingModel train_q_stopping(std::span<const Episode> episodes, TrainConfig cfg) {
  cfg.features.time_input = false;
  auto fitted = fit_bootstrapped(episodes, cfg);
  return {cfg.features, std::move(fitted.net), std::move(fitted.target)};
}

DecisionSignal q_stopping_decision(const QStoppingModel& model, const State& state) {
  return {model.hold_q(state) - state.current_rate, "q-stopping"};
}

// --- estimators --------------------------------------------------------------

namespace {

class BrrEstimator final : public SignalEstimator {
 public:
  explicit BrrEstimator(BrrModel m) : model_(std::move(m)) {}
  std::string tag() const override { return "brr"; }
  Eigen::VectorXd signals(const Episode& e) const override {
    if (e.horizon() != model_.horizon)
      throw std::invalid_argument("brr: episode length differs from trained horizon");
    const int T = e.horizon();
    const Eigen::MatrixXd f = episode_features(e, model_.features, 0, T);
    Eigen::VectorXd d(T);
    for (int t = 0; t + 1 < T; ++t)
      d(t) = model_.network(t + 1).forward(f.col(t))(0) - e.norm_rates(t);
    d(T - 1) = kForcedSell;
    return d;
  }

 private:
  BrrModel model_;
};

/// d_t = net(s_t) - h(s_t) for a single-output hold-value network.
class HoldValueEstimator final : public SignalEstimator {
 public:
  HoldValueEstimator(std::string tag, FeatureSpec spec, neural::Mlp<double> net)
      : tag_(std::move(tag)), spec_(spec), net_(std::move(net)) {}
  std::string tag() const override { return tag_; }
  Eigen::VectorXd signals(const Episode& e) const override {
    const Eigen::MatrixXd f = episode_features(e, spec_, 0, e.horizon());
    return net_.forward_batch(f).row(0).transpose() - e.norm_rates;
  }

 private:
  std::string tag_;
  FeatureSpec spec_;
  neural::Mlp<double> net_;
};

}  // namespace

EstimatorPtr make_estimator(BrrModel model) {
  return std::make_shared<BrrEstimator>(std::move(model));
}

EstimatorPtr make_estimator(ValueModel model) {
  return std::make_shared<HoldValueEstimator>(
      model.mode == HorizonMode::finite ? "dp-finite" : "dp-infinite", model.features,
      std::move(model.net));
}

EstimatorPtr make_estimator(QStoppingModel model) {
  return std::make_shared<HoldValueEstimator>("q-stopping", model.features, std::move(model.net));
}

// --- checkpoints -------------------------------------------------------------

void write_brr(std::ostream& out, const BrrModel& model) {
  out << "brr " << model.horizon << '\n';
  detail::write_features(out, model.features);
  for (const auto& net : model.nets) neural::write_mlp(out, net);
}

BrrModel read_brr(std::istream& in) {
  detail::expect_token(in, "brr");
  BrrModel model;
  if (!(in >> model.horizon) || model.horizon < 2) throw std::runtime_error("checkpoint: bad brr horizon");
  model.features = detail::read_features(in);
  for (int t = 1; t < model.horizon; ++t) model.nets.push_back(neural::read_mlp(in));
  return model;
}

void write_value(std::ostream& out, const ValueModel& model) {
  out << "value " << (model.mode == HorizonMode::finite ? "finite" : "infinite") << '\n';
  detail::write_features(out, model.features);
  neural::write_mlp(out, model.net);
}

ValueModel read_value(std::istream& in) {
  detail::expect_token(in, "value");
  std::string mode;
  in >> mode;
  if (mode != "finite" && mode != "infinite") throw std::runtime_error("checkpoint: bad value mode");
  ValueModel model;
  model.mode = mode == "finite" ? HorizonMode::finite : HorizonMode::infinite;
  model.features = detail::read_features(in);
  model.net = neural::read_mlp(in);
  model.target = neural::TargetModel<double>(model.net);
  return model;
}

void write_q_stopping(std::ostream& out, const QStoppingModel& model) {
  out << "q-stopping\n";
  detail::write_features(out, model.features);
  neural::write_mlp(out, model.net);
}

QStoppingModel read_q_stopping(std::istream& in) {
  detail::expect_token(in, "q-stopping");
  QStoppingModel model;
  model.features = detail::read_features(in);
  model.net = neural::read_mlp(in);
  model.target = neural::TargetModel<double>(model.net);
  return model;
}

}  // namespace fxliq
