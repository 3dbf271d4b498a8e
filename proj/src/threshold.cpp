#include "fxliq/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fxliq {

Action threshold_decide(const ThresholdRule& rule, double d, double current_rate) {
  if (rule.mode == ThresholdMode::rate) return current_rate > rule.delta ? Action::sell : Action::hold;
  return d - rule.delta < 0.0 ? Action::sell : Action::hold;
}

Policy threshold_policy(const ThresholdRule& rule, Eigen::VectorXd signals) {
  return [rule, d = std::move(signals)](const Episode& e, int t) {
    if (t < 0 || t >= d.size()) throw std::out_of_range("threshold_policy: t out of range");
    return threshold_decide(rule, d(t), e.norm_rates(t));
  };
}

double sorted_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> candidate_grid(std::span<const Eigen::VectorXd> history_values,
                                   const CalibrationConfig& cfg) {
  if (history_values.empty()) throw std::invalid_argument("candidate_grid: empty history");
  std::vector<double> grid;
  if (cfg.source == CandidateSource::fixed_grid) {
    grid = cfg.fixed_grid;
  } else {
    if (cfg.candidates < 2) throw std::invalid_argument("candidate_grid: need at least two candidates");
    std::vector<double> pool;
    for (const auto& v : history_values)
      for (Eigen::Index i = 0; i < v.size(); ++i)
        if (std::isfinite(v(i))) pool.push_back(v(i));
    if (pool.empty()) throw std::invalid_argument("candidate_grid: no finite values in history");
    std::sort(pool.begin(), pool.end());
    for (int i = 0; i < cfg.candidates; ++i)
      grid.push_back(sorted_quantile(pool, static_cast<double>(i) / (cfg.candidates - 1)));
  }
  grid.push_back(0.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::vector<std::size_t> history_window(std::span<const Episode> chronological,
                                        const Episode& target, int window) {
  if (window < 1) throw std::invalid_argument("history_window: window must be >= 1");
  std::vector<std::size_t> picked;
  for (std::size_t i = chronological.size(); i-- > 0 && picked.size() < static_cast<std::size_t>(window);)
    if (chronological[i].end_date < target.start_date) picked.push_back(i);
  std::reverse(picked.begin(), picked.end());
  return picked;
}

namespace {

// Same sell-all arithmetic as run_episode, without the per-step policy call.
double episode_payoff(const Episode& e, const Eigen::VectorXd& values, const ThresholdRule& rule,
                      const AccountingOptions& acct) {
  const int T = e.horizon();
  if (values.size() != T) throw std::invalid_argument("window_payoff: value length differs from horizon");
  double balance = 0.0, earned = 0.0;
  for (int t = 0; t < T; ++t) {
    balance += revenue_at(acct.revenue, t);
    const double rate = e.norm_rates(t);
    const bool sell = threshold_decide(rule, values(t), rate) == Action::sell || t == T - 1;
    if (sell && balance > 0.0) {
      earned += balance * (acct.raw_rates ? rate : rate - 1.0);
      balance = 0.0;
    }
  }
  return earned;
}

}  // namespace

double window_payoff(std::span<const Episode> history, std::span<const Eigen::VectorXd> values,
                     const ThresholdRule& rule, const AccountingOptions& acct) {
  if (history.size() != values.size())
    throw std::invalid_argument("window_payoff: history/value count mismatch");
  if (history.empty()) throw std::invalid_argument("window_payoff: empty history");
  std::vector<std::size_t> order(history.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return history[a].id < history[b].id; });
  double total = 0.0;
  for (auto i : order) total += episode_payoff(history[i], values[i], rule, acct);
  return total / static_cast<double>(history.size());
}

CalibrationResult calibrate_threshold(std::span<const Episode> history,
                                      std::span<const Eigen::VectorXd> values, ThresholdMode mode,
                                      const CalibrationConfig& cfg,
                                      const AccountingOptions& acct) {
  CalibrationResult out;
  if (history.empty()) {
    out.rule = {mode, mode == ThresholdMode::rate ? 1.0 : 0.0};
    return out;
  }
  out.candidates = candidate_grid(values, cfg);
  std::size_t best = 0;
  for (std::size_t i = 0; i < out.candidates.size(); ++i) {
    out.payoffs.push_back(window_payoff(history, values, {mode, out.candidates[i]}, acct));
    if (i == 0) continue;
    const double a = out.payoffs[i], b = out.payoffs[best];
    const double da = out.candidates[i], db = out.candidates[best];
    if (a > b || (a == b && (std::abs(da) < std::abs(db) || (std::abs(da) == std::abs(db) && da < db))))
      best = i;
  }
  out.rule = {mode, out.candidates[best]};
  out.window_payoff = out.payoffs[best];
  return out;
}

CalibrationResult calibrate_threshold(const SignalEstimator& estimator,
                                      std::span<const Episode> history,
                                      const CalibrationConfig& cfg,
                                      const AccountingOptions& acct) {
  std::vector<Eigen::VectorXd> values;
  values.reserve(history.size());
  for (const auto& e : history) values.push_back(estimator.signals(e));
  return calibrate_threshold(history, values, ThresholdMode::signal, cfg, acct);
}

}  // namespace fxliq
