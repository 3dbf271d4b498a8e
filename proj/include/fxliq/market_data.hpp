#pragma once

#include <Eigen/Dense>

#include <array>
#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fxliq {

using Date = std::chrono::year_month_day;

/// Parses YYYY-MM-DD; nullopt on any malformed or impossible date.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(const Date& d);

/// Daily closes for one currency pair, in home currency per unit of foreign.
struct RateSeries {
  std::string pair_name;
  std::vector<Date> dates;
  std::vector<double> rates;

  std::size_t size() const { return rates.size(); }
};

/// Throws std::invalid_argument unless dates strictly increase and every rate is finite and > 0.
void validate(const RateSeries& series);

struct LoadedSeries {
  RateSeries series;
  std::size_t dropped = 0;  // rows with a missing or non-positive rate
};

/// Reads `date,rate` rows (header optional). Throws on unreadable files,
/// malformed rows (with line number), duplicate dates, or fewer than `min_rows`
/// valid rows.
LoadedSeries load_rate_series(const std::filesystem::path& path, const std::string& pair,
                              std::size_t min_rows = 1);
LoadedSeries parse_rate_series(std::istream& in, const std::string& pair,
                               std::size_t min_rows = 1);

void write_rate_series(const std::filesystem::path& path, const RateSeries& series);

enum class Split { train, validation, test };
std::string to_string(Split split);

/// One T-step window, normalized by its first rate.
struct Episode {
  int id = 0;
  Date start_date{};
  Date end_date{};
  std::size_t start_index = 0;  // offset into the source series
  Eigen::VectorXd raw_rates;
  Eigen::VectorXd norm_rates;
  Split split = Split::train;

  int horizon() const { return static_cast<int>(norm_rates.size()); }
};

/// Builds a normalized episode directly from rates (synthetic data and tests).
Episode make_episode(int id, const Eigen::VectorXd& raw_rates, Date start = {},
                     Split split = Split::train);

/// Rolling windows: episode k covers [k*shift, k*shift + horizon).
std::vector<Episode> build_episodes(const RateSeries& series, int horizon, int shift);

/// Number of pairwise non-overlapping windows a greedy left-to-right scan keeps.
std::size_t count_non_overlapping(std::span<const Episode> episodes);

struct SplitBoundaries {
  Date validation_start;  // first start date assigned to validation
  Date test_start;        // first start date assigned to test
};

struct EpisodeSplits {
  std::vector<Episode> train;
  std::vector<Episode> validation;
  std::vector<Episode> test;
};

/// Assigns each episode by its start date and tags it. Throws if any split is empty.
EpisodeSplits split_chronological(std::span<const Episode> episodes,
                                  const SplitBoundaries& boundaries);

/// Agent observation at step t.
struct State {
  Eigen::VectorXd window;  // last n normalized rates ending at t, left-padded with 1.0
  int time_index = 0;
  int horizon = 0;
  double current_rate = 0.0;
  std::optional<Eigen::VectorXd> future_actuals;  // rates at t+1..t+m, zero-padded
};

State make_state(const Episode& episode, int t, int window, int augment = 0);

/// Episode store rows: episode_id,start_date,split,t,raw_rate,norm_rate.
void write_episode_store(std::ostream& out, std::span<const Episode> episodes);

}  // namespace fxliq
