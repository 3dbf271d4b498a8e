#include "fxliq/features.hpp"

#include <stdexcept>

namespace fxliq {

Eigen::VectorXd state_features(const State& state, const FeatureSpec& spec) {
  if (state.window.size() != spec.window)
    throw std::invalid_argument("state_features: window length does not match feature spec");
  Eigen::VectorXd f(spec.input_dim());
  f.head(spec.window) = kRateScale * (state.window.array() - 1.0);
  Eigen::Index pos = spec.window;
  if (spec.time_input) f(pos++) = static_cast<double>(state.time_index) / state.horizon;
  if (spec.augment > 0) {
    if (!state.future_actuals || state.future_actuals->size() != spec.augment)
      throw std::invalid_argument("state_features: missing future actuals");
    f.segment(pos, spec.augment) = kRateScale * (state.future_actuals->array() - 1.0);
  }
  return f;
}

Eigen::MatrixXd episode_features(const Episode& episode, const FeatureSpec& spec, int first,
                                 int last) {
  if (first < 0 || last > episode.horizon() || first > last)
    throw std::out_of_range("episode_features: bad step range");
  Eigen::MatrixXd out(spec.input_dim(), last - first);
  for (int t = first; t < last; ++t)
    out.col(t - first) = state_features(make_state(episode, t, spec.window, spec.augment), spec);
  return out;
}

}  // namespace fxliq
