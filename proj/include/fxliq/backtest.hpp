#pragma once

#include "fxliq/action.hpp"
#include "fxliq/market_data.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fxliq {

enum class RevenueModel {
  unit_per_step,  // one unit of foreign currency arrives at every step
  unit_at_start,  // a single unit arrives at t = 0
};

struct AccountingOptions {
  RevenueModel revenue = RevenueModel::unit_per_step;
  /// Pay the normalized rate itself per unit instead of its excess over the first day.
  bool raw_rates = false;
};

struct AccountingState {
  double fc_balance = 0.0;
  double hc_earned = 0.0;
  int t = 0;
};

struct EpisodeResult {
  int episode_id = 0;
  std::string method;
  double cumulative_reward = 0.0;
  std::vector<int> sell_times;     // steps where a nonzero balance was sold
  std::vector<double> units_sold;  // aligned with sell_times
  double total_received = 0.0;
  double threshold_used = 0.0;
  int sell_signals = 0;  // steps where the policy itself said Sell
};

double revenue_at(RevenueModel model, int t);

/// Simulates sell-all accounting with forced liquidation at the last step.
EpisodeResult run_episode(const Policy& policy, const Episode& episode,
                          const AccountingOptions& options = {}, const std::string& method = {},
                          double threshold = 0.0);

Action oracle_policy(const Episode& episode, int t);
/// Sell iff X_t >= max(X_{t+1..t+n}); an empty look-ahead sells.
Action oracle_n_policy(const Episode& episode, int t, int n);

/// Mean cumulative reward, summed in episode_id order.
double acr(std::span<const EpisodeResult> results);

/// Share of decision steps (all but the last) where the policy said Sell.
double sell_rate(std::span<const EpisodeResult> results, int horizon);
/// True when the policy sells at every decision step, i.e. it collapsed to Sell Immediately.
bool is_collapsed(std::span<const EpisodeResult> results, int horizon);

struct MethodResults {
  std::string method;
  std::string pair;
  std::vector<EpisodeResult> results;
};

struct RankingTable {
  std::vector<std::string> methods;  // sorted by overall rank
  std::vector<std::string> pairs;
  Eigen::MatrixXd acr;   // methods x pairs
  Eigen::MatrixXd rank;  // methods x pairs, 1 = best, ties averaged
  Eigen::VectorXd overall_rank;
  // Unranked reference rows (oracles), same pair order.
  std::vector<std::string> reference_methods;
  Eigen::MatrixXd reference_acr;
};

/// Average ranks of `values`, descending: the largest gets 1, ties share the mean rank.
Eigen::VectorXd average_ranks_descending(const Eigen::Ref<const Eigen::VectorXd>& values);

/// Ranks methods per pair by ACR and averages across pairs. Throws if any method
/// is missing a pair or episode sets differ within a pair.
RankingTable compare(std::span<const MethodResults> all);

/// Appends unranked reference rows; the results must cover the table's pairs.
void add_references(RankingTable& table, std::span<const MethodResults> references);

void write_results_csv(std::ostream& out, std::span<const MethodResults> all, const std::string& split);
void write_summary_csv(std::ostream& out, const RankingTable& table);
void render_table(std::ostream& out, const RankingTable& table);

}  // namespace fxliq
