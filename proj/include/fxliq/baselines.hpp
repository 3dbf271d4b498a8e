#pragma once

#include "fxliq/action.hpp"
#include "fxliq/market_data.hpp"

#include <Eigen/Dense>

#include <string>
#include <utility>

namespace fxliq {

/// Exponential moving average, alpha = 2 / (period + 1), seeded with the first value.
Eigen::VectorXd ema(const Eigen::Ref<const Eigen::VectorXd>& series, int period);

struct Macd {
  Eigen::VectorXd macd;    // EMA(12) - EMA(26)
  Eigen::VectorXd signal;  // EMA(9) of macd
};
Macd macd(const Eigen::Ref<const Eigen::VectorXd>& series);

enum class NaiveStrategy { sell_at_end, sell_immediately, sell_greedily };

Action naive_action(NaiveStrategy strategy, const Episode& episode, int t);

struct IndicatorSpec {
  enum class Kind { ema_cross, rate_vs_ema, macd_signal, macd_signal_positive };
  Kind kind = Kind::ema_cross;
  int fast = 10;  // x
  int slow = 20;  // y, ema_cross only

  static IndicatorSpec ema_cross(int x, int y);
  static IndicatorSpec rate_vs_ema(int x);
  static IndicatorSpec macd_signal() { return {Kind::macd_signal, 12, 26}; }
  static IndicatorSpec macd_signal_positive() { return {Kind::macd_signal_positive, 12, 26}; }
};

/// State-based crossover rule evaluated on norm_rates[0..t]; Hold unless the rule fires.
Action indicator_action(const IndicatorSpec& spec, const Episode& episode, int t);

/// CLI token for a baseline (`sell-greedily`, `ema-cross:10,20`, ...).
std::string baseline_token(NaiveStrategy strategy);
std::string baseline_token(const IndicatorSpec& spec);

/// Parses a naive or indicator token into a policy; nullopt-like empty function if unknown.
Policy parse_baseline_policy(const std::string& token);
bool is_baseline_token(const std::string& token);

}  // namespace fxliq
