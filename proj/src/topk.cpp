#include "fxliq/topk.hpp"

#include "fxliq/neural/checkpoint.hpp"

#include <algorithm>
#include <functional>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace fxliq {

TopKTargets topk_targets(const Episode& episode, int t, int k) {
  const int T = episode.horizon();
  if (k < 1) throw std::invalid_argument("topk_targets: K must be >= 1");
  if (t < 0 || t >= T) throw std::out_of_range("topk_targets: t out of range");
  if (t == T - 1) throw std::invalid_argument("topk_targets: no future rates at the last step");
  const int j = std::min(k, T - 1 - t);
  std::vector<double> future(episode.norm_rates.data() + t + 1, episode.norm_rates.data() + T);
  std::partial_sort(future.begin(), future.begin() + j, future.end(), std::greater<>());
  TopKTargets out;
  out.values = Eigen::Map<const Eigen::VectorXd>(future.data(), j);
  return out;
}

double TopKModel::w_hat(const State& state) const {
  return net.forward(state_features(state, features)).mean();
}

namespace {

struct SupervisedSet {
  Eigen::MatrixXd inputs;
  std::vector<Eigen::VectorXd> targets;
};

/// One sample per (episode, t < T-1); `target_of` builds the label.
template <typename TargetOf>
SupervisedSet build_set(std::span<const Episode> episodes, const FeatureSpec& spec,
                        TargetOf&& target_of) {
  const int T = detail::common_horizon(episodes);
  if (T < 2) throw std::invalid_argument("topk: episodes need at least two steps");
  SupervisedSet set;
  set.inputs.resize(spec.input_dim(), static_cast<Eigen::Index>(episodes.size()) * (T - 1));
  Eigen::Index col = 0;
  for (const auto& e : episodes) {
    const Eigen::MatrixXd f = episode_features(e, spec, 0, T - 1);
    set.inputs.middleCols(col, T - 1) = f;
    col += T - 1;
    for (int t = 0; t + 1 < T; ++t) set.targets.push_back(target_of(e, t));
  }
  return set;
}

TopKModel fit_direct(const SupervisedSet& set, int outputs, const neural::LossSpec& loss,
                     const TrainConfig& cfg, double* final_loss) {
  TopKModel model;
  model.k = outputs;
  model.features = cfg.features;
  model.net = neural::Mlp<double>(neural::make_dims(cfg.features.input_dim(), cfg.hidden, outputs),
                                  cfg.seed);
  // Labels are fixed observations; nothing here reads a model output as a target.
  const auto targets = [&](std::span<const Eigen::Index> idx) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(set.targets[static_cast<std::size_t>(i)]);
    return out;
  };
  const double loss_value = detail::fit(model.net, set.inputs, targets, loss, cfg,
                                        detail::shuffled_sampler(set.inputs.cols()));
  if (final_loss) *final_loss = loss_value;
  return model;
}

}  // namespace

TopKModel train_topk(std::span<const Episode> episodes, int k, const TrainConfig& cfg,
                     double* final_loss) {
  if (k < 1) throw std::invalid_argument("train_topk: K must be >= 1");
  const auto set = build_set(episodes, cfg.features,
                             [k](const Episode& e, int t) { return topk_targets(e, t, k).values; });
  return fit_direct(set, k, neural::LossSpec::weighted_topk(), cfg, final_loss);
}

TopKModel train_max_regression(std::span<const Episode> episodes, const TrainConfig& cfg,
                               double* final_loss) {
  const auto set = build_set(episodes, cfg.features, [](const Episode& e, int t) {
    const int T = e.horizon();
    return Eigen::VectorXd::Constant(1, e.norm_rates.segment(t + 1, T - 1 - t).maxCoeff()).eval();
  });
  return fit_direct(set, 1, neural::LossSpec::mse(), cfg, final_loss);
}

DecisionSignal topk_decision(const TopKModel& model, const State& state) {
  return {model.w_hat(state) - state.current_rate, "topk"};
}

namespace {

class TopKEstimator final : public SignalEstimator {
 public:
  explicit TopKEstimator(TopKModel m) : model_(std::move(m)) {}
  std::string tag() const override { return "topk"; }
  Eigen::VectorXd signals(const Episode& e) const override {
    const Eigen::MatrixXd f = episode_features(e, model_.features, 0, e.horizon());
    return model_.net.forward_batch(f).colwise().mean().transpose() - e.norm_rates;
  }

 private:
  TopKModel model_;
};

}  // namespace

EstimatorPtr make_estimator(TopKModel model) {
  return std::make_shared<TopKEstimator>(std::move(model));
}

void write_topk(std::ostream& out, const TopKModel& model) {
  out << "topk " << model.k << '\n';
  detail::write_features(out, model.features);
  neural::write_mlp(out, model.net);
}

TopKModel read_topk(std::istream& in) {
  detail::expect_token(in, "topk");
  TopKModel model;
  if (!(in >> model.k) || model.k < 1) throw std::runtime_error("checkpoint: bad topk K");
  model.features = detail::read_features(in);
  model.net = neural::read_mlp(in);
  if (model.net.output_dim() != model.k) throw std::runtime_error("checkpoint: topk head count mismatch");
  return model;
}

}  // namespace fxliq
