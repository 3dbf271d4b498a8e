#pragma once

#include "fxliq/action.hpp"
#include "fxliq/backtest.hpp"
#include "fxliq/features.hpp"
#include "fxliq/market_data.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace fxliq {

enum class ThresholdMode {
  signal,  // sell iff d_t < delta
  rate,    // sell iff the current normalized rate > delta (Sell-AT)
};

struct ThresholdRule {
  ThresholdMode mode = ThresholdMode::signal;
  double delta = 0.0;
};

enum class CandidateSource { signal_quantiles, fixed_grid };

struct CalibrationConfig {
  int window = 50;      // trailing episodes, H
  int candidates = 21;  // quantile count, C
  CandidateSource source = CandidateSource::signal_quantiles;
  std::vector<double> fixed_grid;  // used when source == fixed_grid
};

Action threshold_decide(const ThresholdRule& rule, double d, double current_rate);

/// Policy that applies `rule` to a precomputed per-step signal of one episode.
Policy threshold_policy(const ThresholdRule& rule, Eigen::VectorXd signals);

/// Linear-interpolation quantile of sorted data, p in [0, 1].
double sorted_quantile(std::span<const double> sorted, double p);

/// C evenly spaced quantiles of the finite values pooled over the window, plus 0,
/// sorted ascending and deduplicated.
std::vector<double> candidate_grid(std::span<const Eigen::VectorXd> history_values,
                                   const CalibrationConfig& cfg);

/// Indices (into `chronological`) of the last H episodes that ended before
/// `target` starts, oldest first.
std::vector<std::size_t> history_window(std::span<const Episode> chronological,
                                        const Episode& target, int window);

/// Mean payoff of `rule` over the given episodes with their per-step values.
double window_payoff(std::span<const Episode> history, std::span<const Eigen::VectorXd> values,
                     const ThresholdRule& rule, const AccountingOptions& acct = {});

struct CalibrationResult {
  ThresholdRule rule;
  double window_payoff = 0.0;
  std::vector<double> candidates;
  std::vector<double> payoffs;  // aligned with candidates
};

/// Picks the candidate with the best mean payoff on the history; ties go to the
/// smaller |delta|, then the smaller delta. An empty history yields delta = 0 in
/// signal mode and delta = 1 (the first-day rate) in rate mode.
CalibrationResult calibrate_threshold(std::span<const Episode> history,
                                      std::span<const Eigen::VectorXd> values, ThresholdMode mode,
                                      const CalibrationConfig& cfg,
                                      const AccountingOptions& acct = {});

CalibrationResult calibrate_threshold(const SignalEstimator& estimator,
                                      std::span<const Episode> history,
                                      const CalibrationConfig& cfg,
                                      const AccountingOptions& acct = {});

}  // namespace fxliq
