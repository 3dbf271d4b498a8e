#pragma once

#include "fxliq/learner_config.hpp"
#include "fxliq/market_data.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <initializer_list>
#include <random>
#include <vector>

namespace fxliq::testing {

inline Episode episode_of(std::initializer_list<double> rates, int id = 0) {
  Eigen::VectorXd raw(static_cast<Eigen::Index>(rates.size()));
  Eigen::Index i = 0;
  for (double r : rates) raw(i++) = r;
  return make_episode(id, raw);
}

inline Episode constant_episode(int horizon, int id = 0, double level = 1.3) {
  return make_episode(id, Eigen::VectorXd::Constant(horizon, level));
}

/// Geometric random walk episodes with consecutive ids and daily dates.
inline std::vector<Episode> random_episodes(int count, int horizon, std::uint64_t seed,
                                            double sigma = 0.01) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<Episode> out;
  const auto base = std::chrono::sys_days{std::chrono::year{2000} / 1 / 1};
  for (int e = 0; e < count; ++e) {
    Eigen::VectorXd raw(horizon);
    double x = 1.0 + 0.2 * std::abs(noise(rng)) / sigma;
    for (int t = 0; t < horizon; ++t) {
      raw(t) = x;
      x *= std::exp(noise(rng));
    }
    auto ep = make_episode(e, raw, Date{base + std::chrono::days{e * 7}});
    ep.end_date = Date{base + std::chrono::days{e * 7 + horizon - 1}};
    out.push_back(std::move(ep));
  }
  return out;
}

/// Episodes laid out every `gap` days so that each ends before the next starts.
inline std::vector<Episode> chronological(std::vector<Episode> eps, int gap) {
  const auto base = std::chrono::sys_days{std::chrono::year{2001} / 1 / 1};
  for (std::size_t i = 0; i < eps.size(); ++i) {
    eps[i].id = static_cast<int>(i);
    eps[i].start_date = Date{base + std::chrono::days{static_cast<int>(i) * gap}};
    eps[i].end_date = Date{base + std::chrono::days{static_cast<int>(i) * gap + gap / 2}};
  }
  return eps;
}

inline TrainConfig small_config(int window, int epochs, std::uint64_t seed = 1) {
  TrainConfig cfg;
  cfg.features.window = window;
  cfg.hidden = {32, 16};
  cfg.epochs = epochs;
  cfg.batch_size = 32;
  cfg.sync_every = 50;
  cfg.seed = seed;
  return cfg;
}

}  // namespace fxliq::testing
