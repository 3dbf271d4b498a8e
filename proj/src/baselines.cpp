#include "fxliq/baselines.hpp"

#include <cstdlib>
#include <stdexcept>

namespace fxliq {

Eigen::VectorXd ema(const Eigen::Ref<const Eigen::VectorXd>& series, int period) {
  if (period < 1) throw std::invalid_argument("ema: period must be >= 1");
  if (series.size() == 0) throw std::invalid_argument("ema: empty series");
  const double alpha = 2.0 / (period + 1.0);
  Eigen::VectorXd out(series.size());
  out(0) = series(0);
  for (Eigen::Index t = 1; t < series.size(); ++t)
    out(t) = alpha * series(t) + (1.0 - alpha) * out(t - 1);
  return out;
}

Macd macd(const Eigen::Ref<const Eigen::VectorXd>& series) {
  Macd out;
  out.macd = ema(series, 12) - ema(series, 26);
  out.signal = ema(out.macd, 9);
  return out;
}

Action naive_action(NaiveStrategy strategy, const Episode& episode, int t) {
  const int T = episode.horizon();
  if (t < 0 || t >= T) throw std::out_of_range("naive_action: t out of range");
  switch (strategy) {
    case NaiveStrategy::sell_at_end: return t == T - 1 ? Action::sell : Action::hold;
    case NaiveStrategy::sell_immediately: return Action::sell;
    case NaiveStrategy::sell_greedily:
      return episode.norm_rates(t) > 1.0 ? Action::sell : Action::hold;
  }
  return Action::hold;
}

IndicatorSpec IndicatorSpec::ema_cross(int x, int y) {
  if (x < 1 || y < 1 || x >= y) throw std::invalid_argument("ema_cross: need 1 <= x < y");
  return {Kind::ema_cross, x, y};
}

IndicatorSpec IndicatorSpec::rate_vs_ema(int x) {
  if (x < 1) throw std::invalid_argument("rate_vs_ema: period must be >= 1");
  return {Kind::rate_vs_ema, x, x};
}

Action indicator_action(const IndicatorSpec& spec, const Episode& episode, int t) {
  if (t < 0 || t >= episode.horizon()) throw std::out_of_range("indicator_action: t out of range");
  const auto past = episode.norm_rates.head(t + 1);
  bool sell = false;
  switch (spec.kind) {
    case IndicatorSpec::Kind::ema_cross:
      sell = ema(past, spec.fast)(t) < ema(past, spec.slow)(t);
      break;
    case IndicatorSpec::Kind::rate_vs_ema:
      sell = past(t) < ema(past, spec.fast)(t);
      break;
    case IndicatorSpec::Kind::macd_signal: {
      const auto m = macd(past);
      sell = m.macd(t) < m.signal(t);
      break;
    }
    case IndicatorSpec::Kind::macd_signal_positive: {
      const auto m = macd(past);
      sell = m.macd(t) < m.signal(t) && m.macd(t) > 0.0;
      break;
    }
  }
  return sell ? Action::sell : Action::hold;
}

std::string baseline_token(NaiveStrategy strategy) {
  switch (strategy) {
    case NaiveStrategy::sell_at_end: return "sell-at-end";
    case NaiveStrategy::sell_immediately: return "sell-immediately";
    case NaiveStrategy::sell_greedily: return "sell-greedily";
  }
  return "unknown";
}

std::string baseline_token(const IndicatorSpec& spec) {
  switch (spec.kind) {
    case IndicatorSpec::Kind::ema_cross:
      return "ema-cross:" + std::to_string(spec.fast) + "," + std::to_string(spec.slow);
    case IndicatorSpec::Kind::rate_vs_ema: return "rate-vs-ema:" + std::to_string(spec.fast);
    case IndicatorSpec::Kind::macd_signal: return "macd-signal";
    case IndicatorSpec::Kind::macd_signal_positive: return "macd-signal-pos";
  }
  return "unknown";
}

namespace {

int parse_period(const std::string& text, const std::string& token) {
  char* end = nullptr;
  const long v = std::strtol(text.c_str(), &end, 10);
  if (text.empty() || *end != '\0' || v < 1 || v > 100000)
    throw std::invalid_argument("bad period in strategy token '" + token + "'");
  return static_cast<int>(v);
}

}  // namespace

Policy parse_baseline_policy(const std::string& token) {
  for (auto s : {NaiveStrategy::sell_at_end, NaiveStrategy::sell_immediately,
                 NaiveStrategy::sell_greedily})
    if (token == baseline_token(s))
      return [s](const Episode& e, int t) { return naive_action(s, e, t); };

  IndicatorSpec spec;
  if (token == "macd-signal") {
    spec = IndicatorSpec::macd_signal();
  } else if (token == "macd-signal-pos") {
    spec = IndicatorSpec::macd_signal_positive();
  } else if (token.rfind("ema-cross:", 0) == 0) {
    const auto args = token.substr(10);
    const auto comma = args.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("ema-cross needs x,y: " + token);
    spec = IndicatorSpec::ema_cross(parse_period(args.substr(0, comma), token),
                                    parse_period(args.substr(comma + 1), token));
  } else if (token.rfind("rate-vs-ema:", 0) == 0) {
    spec = IndicatorSpec::rate_vs_ema(parse_period(token.substr(12), token));
  } else {
    return {};
  }
  return [spec](const Episode& e, int t) { return indicator_action(spec, e, t); };
}

bool is_baseline_token(const std::string& token) {
  try {
    return static_cast<bool>(parse_baseline_policy(token));
  } catch (const std::invalid_argument&) {
    return false;
  }
}

}  // namespace fxliq
