#include "fxliq/threshold.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace fxliq;

namespace {

std::vector<Eigen::VectorXd> random_signals(std::span<const Episode> eps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.05);
  std::vector<Eigen::VectorXd> out;
  for (const auto& e : eps) {
    Eigen::VectorXd d(e.horizon());
    for (auto& v : d) v = n(rng);
    out.push_back(d);
  }
  return out;
}

}  // namespace

TEST_SUITE("adaptive-threshold") {

TEST_CASE("threshold_decide examples") {
  CHECK(threshold_decide({ThresholdMode::signal, 0.0}, 0.05, 1.0) == Action::hold);
  CHECK(threshold_decide({ThresholdMode::signal, 0.0}, -0.01, 1.0) == Action::sell);
  CHECK(threshold_decide({ThresholdMode::signal, 0.0}, 0.0, 1.0) == Action::hold);
  CHECK(threshold_decide({ThresholdMode::rate, 1.01}, 0.0, 1.02) == Action::sell);
  CHECK(threshold_decide({ThresholdMode::rate, 1.01}, 0.0, 1.01) == Action::hold);
}

TEST_CASE("candidate grid examples") {
  CalibrationConfig cfg;
  const std::vector<Eigen::VectorXd> same{Eigen::VectorXd::Constant(10, 0.03), Eigen::VectorXd::Constant(5, 0.03)};
  CHECK(candidate_grid(same, cfg) == std::vector<double>{0.0, 0.03});

  cfg.candidates = 3;
  const std::vector<Eigen::VectorXd> uniform{Eigen::VectorXd::LinSpaced(201, -0.1, 0.1)};
  const auto g = candidate_grid(uniform, cfg);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == doctest::Approx(-0.1));
  CHECK(g[1] == doctest::Approx(0.0).epsilon(1e-12).scale(1e-3));
  CHECK(g[2] == doctest::Approx(0.1));

  const std::vector<Eigen::VectorXd> rates{Eigen::VectorXd::Ones(58)};
  CHECK(candidate_grid(rates, CalibrationConfig{}) == std::vector<double>{0.0, 1.0});

  CHECK_THROWS(candidate_grid(std::vector<Eigen::VectorXd>{}, cfg));
}

TEST_CASE("candidate grid matches a sort-based quantile oracle") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Eigen::VectorXd> hist;
    std::vector<double> pool;
    for (int i = 0; i < 5; ++i) {
      Eigen::VectorXd v(7);
      for (auto& x : v) {
        x = u(rng);
        pool.push_back(x);
      }
      hist.push_back(v);
    }
    std::sort(pool.begin(), pool.end());
    CalibrationConfig cfg;
    cfg.candidates = 5;
    auto expected = std::vector<double>{0.0};
    for (int i = 0; i < 5; ++i) {
      const double h = (pool.size() - 1) * (i / 4.0);
      const auto lo = static_cast<std::size_t>(h);
      const auto hi = std::min(lo + 1, pool.size() - 1);
      expected.push_back(pool[lo] + (h - lo) * (pool[hi] - pool[lo]));
    }
    std::sort(expected.begin(), expected.end());
    const auto got = candidate_grid(hist, cfg);
    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-14));
  }
}

TEST_CASE("forced-sell sentinels are excluded from the grid") {
  Eigen::VectorXd d = Eigen::VectorXd::Constant(5, 0.02);
  d(4) = kForcedSell;
  const std::vector<Eigen::VectorXd> hist{d};
  const auto g = candidate_grid(hist, CalibrationConfig{});
  for (double c : g) CHECK(std::isfinite(c));
}

TEST_CASE("single candidate and dominance") {
  const auto eps = fxliq::testing::random_episodes(10, 12, 3);
  CalibrationConfig cfg;
  cfg.source = CandidateSource::fixed_grid;
  cfg.fixed_grid = {0.0};
  const auto values = random_signals(eps, 1);
  CHECK(calibrate_threshold(eps, values, ThresholdMode::signal, cfg).rule.delta == 0.0);

  // Rising episodes with flat signals: 0.5 sells at once and loses; -0.5 and 0 both hold and tie.
  std::vector<Episode> rising;
  for (int i = 0; i < 6; ++i) rising.push_back(make_episode(i, Eigen::VectorXd::LinSpaced(10, 1.0, 1.2 + 0.01 * i)));
  std::vector<Eigen::VectorXd> zeros(rising.size(), Eigen::VectorXd::Zero(10));
  cfg.fixed_grid = {-0.5, 0.5};
  const auto res = calibrate_threshold(rising, zeros, ThresholdMode::signal, cfg);
  REQUIRE(res.candidates == std::vector<double>{-0.5, 0.0, 0.5});
  CHECK(res.payoffs[0] == res.payoffs[1]);
  CHECK(res.payoffs[2] < res.payoffs[1]);
  CHECK(res.rule.delta == 0.0);
}

TEST_CASE("calibration is exhaustive over its candidates") {
  const auto eps = fxliq::testing::random_episodes(50, 20, 7);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto values = random_signals(eps, seed);
    const auto res = calibrate_threshold(eps, values, ThresholdMode::signal, CalibrationConfig{});
    double best = -1e300;
    for (double c : res.candidates) best = std::max(best, window_payoff(eps, values, {ThresholdMode::signal, c}));
    CHECK(res.window_payoff == best);
    for (double p : res.payoffs) CHECK(p <= res.window_payoff);
  }
}

TEST_CASE("ties prefer the smaller magnitude then the smaller value") {
  const std::vector<Episode> flat(4, fxliq::testing::constant_episode(6));
  const std::vector<Eigen::VectorXd> values(4, Eigen::VectorXd::Constant(6, 0.3));
  CalibrationConfig cfg;
  cfg.source = CandidateSource::fixed_grid;
  cfg.fixed_grid = {-0.2, 0.2, 0.5};
  CHECK(calibrate_threshold(flat, values, ThresholdMode::signal, cfg).rule.delta == 0.0);

  // -0.2 never sells early, 0.2 sells every step, 0 sells only at t=0; the first two tie above 0
  const std::vector<Episode> eps{fxliq::testing::episode_of({1.0, 1.25, 1.125})};
  const std::vector<Eigen::VectorXd> d{(Eigen::VectorXd(3) << -0.1, 0.1, 0.1).finished()};
  cfg.fixed_grid = {0.2, -0.2};
  const auto res = calibrate_threshold(eps, d, ThresholdMode::signal, cfg);
  REQUIRE(res.payoffs.size() == 3);
  CHECK(res.payoffs[0] == res.payoffs[2]);
  CHECK(res.payoffs[1] < res.payoffs[0]);
  CHECK(res.rule.delta == -0.2);
}

TEST_CASE("empty history falls back") {
  const std::vector<Episode> none;
  const std::vector<Eigen::VectorXd> nov;
  CHECK(calibrate_threshold(none, nov, ThresholdMode::signal, {}).rule.delta == 0.0);
  CHECK(calibrate_threshold(none, nov, ThresholdMode::rate, {}).rule.delta == 1.0);
}

TEST_CASE("history window only holds episodes that ended before the target") {
  auto eps = fxliq::testing::chronological(fxliq::testing::random_episodes(80, 10, 2), 10);
  const auto idx = history_window(eps, eps[60], 50);
  CHECK(idx.size() == 50);
  CHECK(idx.front() == 10);
  CHECK(idx.back() == 59);
  for (auto i : idx) CHECK(eps[i].end_date < eps[60].start_date);
  CHECK(history_window(eps, eps[0], 50).empty());
  CHECK(history_window(eps, eps[3], 50).size() == 3);

  // overlapping windows: the rolling builder's neighbours are skipped until they end
  auto overlapping = fxliq::testing::random_episodes(30, 20, 3);
  for (auto& e : overlapping) {
    const auto start = std::chrono::sys_days{e.start_date};
    e.end_date = Date{start + std::chrono::days{19}};
  }
  for (std::size_t t = 0; t < overlapping.size(); ++t)
    for (auto i : history_window(overlapping, overlapping[t], 50))
      CHECK(overlapping[i].end_date < overlapping[t].start_date);
}

TEST_CASE("calibration ignores mutations of episodes after the target") {
  auto eps = fxliq::testing::chronological(fxliq::testing::random_episodes(120, 15, 9), 20);
  auto values = random_signals(eps, 3);
  const std::size_t target = 70;
  auto calibrate = [&](const std::vector<Episode>& all, const std::vector<Eigen::VectorXd>& vals) {
    const auto idx = history_window(all, all[target], 50);
    std::vector<Episode> h;
    std::vector<Eigen::VectorXd> v;
    for (auto i : idx) {
      h.push_back(all[i]);
      v.push_back(vals[i]);
    }
    return calibrate_threshold(h, v, ThresholdMode::signal, CalibrationConfig{});
  };
  const auto before = calibrate(eps, values);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (std::size_t i = target; i < eps.size(); ++i) {
    for (auto& x : eps[i].norm_rates) x = u(rng);
    values[i].setConstant(u(rng) - 1.0);
  }
  const auto after = calibrate(eps, values);
  CHECK(before.rule.delta == after.rule.delta);
  CHECK(before.window_payoff == after.window_payoff);
}

TEST_CASE("window payoff equals the backtester's ACR") {
  const auto eps = fxliq::testing::random_episodes(30, 14, 12);
  const auto values = random_signals(eps, 6);
  for (auto revenue : {RevenueModel::unit_per_step, RevenueModel::unit_at_start})
    for (bool raw : {false, true})
      for (double delta : {-0.05, 0.0, 0.03}) {
        const AccountingOptions acct{revenue, raw};
        const ThresholdRule rule{ThresholdMode::signal, delta};
        std::vector<EpisodeResult> results;
        for (std::size_t i = 0; i < eps.size(); ++i)
          results.push_back(run_episode(threshold_policy(rule, values[i]), eps[i], acct));
        CHECK(window_payoff(eps, values, rule, acct) == acr(results));
      }
}

TEST_CASE("a single zero candidate reduces to the unthresholded rule") {
  const auto eps = fxliq::testing::random_episodes(20, 12, 5);
  const auto values = random_signals(eps, 4);
  CalibrationConfig cfg;
  cfg.source = CandidateSource::fixed_grid;
  cfg.fixed_grid = {0.0};
  const auto res = calibrate_threshold(eps, values, ThresholdMode::signal, cfg);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const auto p = threshold_policy(res.rule, values[i]);
    for (int t = 0; t < 12; ++t) CHECK((p(eps[i], t) == Action::sell) == (values[i](t) < 0.0));
  }
}

TEST_CASE("rate mode calibrates over normalized rates") {
  const auto eps = fxliq::testing::random_episodes(30, 15, 6);
  std::vector<Eigen::VectorXd> rates;
  for (const auto& e : eps) rates.push_back(e.norm_rates);
  const auto res = calibrate_threshold(eps, rates, ThresholdMode::rate, CalibrationConfig{});
  CHECK(res.rule.mode == ThresholdMode::rate);
  CHECK(std::find(res.candidates.begin(), res.candidates.end(), res.rule.delta) != res.candidates.end());
}

}
