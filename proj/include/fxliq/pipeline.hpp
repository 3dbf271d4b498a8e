#pragma once

#include "fxliq/backtest.hpp"
#include "fxliq/features.hpp"
#include "fxliq/learner_config.hpp"
#include "fxliq/market_data.hpp"
#include "fxliq/threshold.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace fxliq {

/// Fully resolved run configuration. Defaults follow the evaluation protocol:
/// T = 58, shift 5, lr 0.003, batch 128, 256/128 hidden units.
struct RunConfig {
  std::vector<std::string> pairs{"EURUSD"};
  std::string data;      // single-pair CSV
  std::string data_dir;  // directory of <PAIR>.csv files
  int horizon = 58;
  int shift = 5;
  std::string validation_start = "2017-01-10";
  std::string test_start = "2019-04-25";

  int window = 10;  // n
  int k = 3;
  double focal_gamma = 2.0;
  int augment = 0;  // true next-m rates as extra inputs
  std::vector<int> window_grid{5, 10, 20};
  std::vector<int> k_grid{1, 2, 3, 4, 5};
  bool tune = false;  // grid-search learned methods inside `compare`

  int at_window = 50;
  int at_candidates = 21;
  bool no_at = false;

  std::vector<int> hidden{256, 128};
  double learning_rate = 0.003;
  int batch_size = 128;
  int epochs = 30;
  int sync_every = 200;
  long dqn_steps = 30000;
  long dqn_warmup = 1000;
  std::size_t replay_capacity = 50000;
  bool balance_weighted_rewards = false;

  std::string revenue = "unit-per-step";  // or unit-at-start
  bool raw_acr = false;
  std::string split = "test";
  std::uint64_t seed = 7;
  std::string out_dir = "fxliq_out";
  bool reuse = false;
  int jobs = 0;  // 0: hardware concurrency
};

/// key = value lines; `#` starts a comment. Unknown keys throw.
void apply_config_text(RunConfig& cfg, std::istream& in);
void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
void write_config(std::ostream& out, const RunConfig& cfg);
void validate(const RunConfig& cfg);

AccountingOptions accounting_options(const RunConfig& cfg);
CalibrationConfig calibration_config(const RunConfig& cfg);
TrainConfig train_config(const RunConfig& cfg);

/// The 21 ranked configurations of the benchmark, in table order.
std::vector<std::string> benchmark_methods();
std::vector<std::string> learned_methods();
bool is_learned_method(const std::string& token);
bool is_known_method(const std::string& token);  // also accepts oracle and oracle-<n>
std::string file_token(const std::string& token);

/// All episodes of one pair in chronological order, tagged by split.
struct PairData {
  std::string pair;
  RateSeries series;
  std::size_t dropped_rows = 0;
  std::vector<Episode> episodes;
  EpisodeSplits splits;

  std::vector<Episode> episodes_in(Split split) const;
};

PairData prepare_pair(const RateSeries& series, const RunConfig& cfg);
PairData load_pair(const std::string& pair, const RunConfig& cfg);
std::string data_path_for(const std::string& pair, const RunConfig& cfg);

/// A trained learner: its signal estimator and serialized checkpoint.
struct TrainedMethod {
  std::string token;
  EstimatorPtr estimator;
  std::string checkpoint;
};

TrainedMethod train_method(const std::string& token, std::span<const Episode> train,
                           const RunConfig& cfg);
TrainedMethod load_method(const std::string& token, const std::string& checkpoint);

/// Backtests one method on the episodes of `split`. Learned methods need `trained`.
/// Adaptive thresholds read only episodes that ended before each evaluated episode.
MethodResults evaluate_method(const std::string& token, const PairData& data, Split split,
                              const RunConfig& cfg, const TrainedMethod* trained = nullptr);

struct GridPoint {
  int window = 0;
  int k = 0;
  double validation_acr = 0.0;
};

struct GridSearchResult {
  std::vector<GridPoint> points;
  GridPoint best;
};

/// Trains each grid point on train and scores it on validation only.
GridSearchResult grid_search(const std::string& token, const PairData& data, const RunConfig& cfg);

Split parse_split(const std::string& text);

}  // namespace fxliq
