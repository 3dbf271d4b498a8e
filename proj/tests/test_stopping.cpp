#include "fxliq/stopping.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace fxliq;
using fxliq::testing::small_config;

namespace {

Eigen::VectorXd suffix_max_scan(const Eigen::VectorXd& x) {
  Eigen::VectorXd out(x.size());
  double running = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = x.size(); i-- > 0;) {
    if (x(i) > running) running = x(i);
    out(i) = running;
  }
  return out;
}

const Eigen::VectorXd& wiggle() {
  static const Eigen::VectorXd rates =
      (Eigen::VectorXd(8) << 1.0, 1.05, 0.97, 1.1, 1.02, 0.95, 1.08, 0.99).finished();
  return rates;
}

std::vector<Episode> repeated(const Eigen::VectorXd& rates, int copies) {
  return std::vector<Episode>(static_cast<std::size_t>(copies), make_episode(0, rates));
}

neural::Mlp<double> constant_net(int input_dim, double value) {
  auto net = neural::Mlp<double>::zeros({input_dim, 2, 1});
  net.layers().back().bias(0) = value;
  return net;
}

}  // namespace

TEST_SUITE("stopping-learners") {

TEST_CASE("Snell envelope equals the suffix maximum") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.8, 1.2);
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd x(1 + static_cast<int>(rng() % 80));
    for (auto& v : x) v = u(rng);
    CHECK(snell_envelope(x) == suffix_max_scan(x));
  }
}

TEST_CASE("BRR with T=2 trains exactly one network") {
  auto cfg = small_config(2, 5);
  const auto model = train_brr(fxliq::testing::random_episodes(10, 2, 3), cfg);
  CHECK(model.nets.size() == 1);
  CHECK(model.horizon == 2);
  CHECK_NOTHROW(model.network(1));
  CHECK_THROWS(model.network(2));
}

TEST_CASE("BRR on constant data fits 1.0") {
  auto cfg = small_config(3, 150);
  const auto eps = std::vector<Episode>(32, fxliq::testing::constant_episode(5));
  const auto model = train_brr(eps, cfg);
  for (int t = 0; t < 4; ++t) {
    const auto d = brr_decision(model, make_state(eps[0], t, 3));
    CHECK(std::abs(d.d) < 1e-2);
  }
}

TEST_CASE("BRR fits the suffix max of a repeated episode") {
  auto cfg = small_config(3, 250);
  const auto eps = repeated(wiggle(), 32);
  const auto model = train_brr(eps, cfg);
  const auto y = snell_envelope(eps[0].norm_rates);
  for (int t = 1; t < 8; ++t) {
    const auto f = state_features(make_state(eps[0], t - 1, 3), cfg.features);
    CHECK(std::abs(model.network(t).forward(f)(0) - y(t)) < 2e-2);
  }
}

TEST_CASE("BRR decision arithmetic") {
  BrrModel model;
  model.horizon = 4;
  model.features.window = 2;
  for (int t = 1; t < 4; ++t) model.nets.push_back(constant_net(2, 1.05));
  const auto e = fxliq::testing::constant_episode(4);
  CHECK(brr_decision(model, make_state(e, 0, 2)).d == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(brr_decision(model, make_state(e, 3, 2)).d == kForcedSell);
  const auto high = fxliq::testing::episode_of({1.0, 3.0, 1.0, 1.0});
  CHECK(brr_decision(model, make_state(high, 1, 2)).d < 0.0);
}

TEST_CASE("value learners on constant data") {
  auto cfg = small_config(3, 150);
  const auto eps = std::vector<Episode>(32, fxliq::testing::constant_episode(6));
  for (auto mode : {HorizonMode::finite, HorizonMode::infinite}) {
    const auto model = train_value(eps, mode, cfg);
    for (int t = 0; t < 5; ++t) CHECK(std::abs(value_decision(model, make_state(eps[0], t, 3)).d) < 1e-2);
  }
  const auto q = train_q_stopping(eps, cfg);
  for (int t = 0; t < 5; ++t) CHECK(std::abs(q.hold_q(make_state(eps[0], t, 3)) - 1.0) < 1e-2);
}

TEST_CASE("two-step deterministic data backs up to 1.2") {
  auto cfg = small_config(1, 150);
  const auto eps = repeated((Eigen::VectorXd(2) << 1.0, 1.2).finished(), 32);
  const auto v = train_value(eps, HorizonMode::finite, cfg);
  CHECK(std::abs(v.hold_value(make_state(eps[0], 0, 1)) - 1.2) < 2e-2);
  const auto q = train_q_stopping(eps, cfg);
  CHECK(std::abs(q.hold_q(make_state(eps[0], 0, 1)) - 1.2) < 2e-2);
}

TEST_CASE("value decision arithmetic and time invariance in infinite mode") {
  ValueModel model;
  model.mode = HorizonMode::infinite;
  model.features.window = 2;
  model.net = constant_net(2, 1.1);
  const auto e = fxliq::testing::constant_episode(5);
  CHECK(value_decision(model, make_state(e, 1, 2)).d == doctest::Approx(0.1).epsilon(1e-12));
  model.net = constant_net(2, 1.0);
  CHECK(value_decision(model, make_state(e, 1, 2)).d == 0.0);

  model.net = neural::Mlp<double>({2, 8, 1}, 3);
  auto a = make_state(e, 2, 2), b = make_state(e, 4, 2);
  CHECK(a.window == b.window);
  CHECK(value_decision(model, a).d == value_decision(model, b).d);
}

TEST_CASE("finite mode appends time and infinite mode does not") {
  auto cfg = small_config(2, 1);
  const auto eps = fxliq::testing::random_episodes(4, 5, 2);
  CHECK(train_value(eps, HorizonMode::finite, cfg).net.input_dim() == 3);
  CHECK(train_value(eps, HorizonMode::infinite, cfg).net.input_dim() == 2);
  CHECK_THROWS(train_value(std::vector<Episode>{}, HorizonMode::finite, cfg));
}

TEST_CASE("q-stopping agrees with the infinite-horizon value learner") {
  auto cfg = small_config(4, 20, 5);
  const auto eps = fxliq::testing::random_episodes(40, 12, 21);
  const auto v = train_value(eps, HorizonMode::infinite, cfg);
  const auto q = train_q_stopping(eps, cfg);
  int agree = 0, total = 0;
  for (const auto& e : eps)
    for (int t = 0; t < e.horizon() - 1; ++t, ++total) {
      const auto s = make_state(e, t, 4);
      agree += (value_decision(v, s).d < 0) == (q_stopping_decision(q, s).d < 0);
    }
  CHECK(static_cast<double>(agree) / total > 0.95);
}

TEST_CASE("every stopping learner liquidates at the last step") {
  auto cfg = small_config(3, 2);
  const auto eps = fxliq::testing::random_episodes(6, 7, 4);
  const auto brr = make_estimator(train_brr(eps, cfg));
  for (const auto& e : eps) CHECK(brr->signals(e)(6) == kForcedSell);
}

TEST_CASE("stopping checkpoints round trip exactly") {
  auto cfg = small_config(3, 2);
  const auto eps = fxliq::testing::random_episodes(6, 7, 4);
  {
    const auto m = train_brr(eps, cfg);
    std::stringstream s;
    write_brr(s, m);
    const auto back = read_brr(s);
    CHECK(make_estimator(back)->signals(eps[1]) == make_estimator(m)->signals(eps[1]));
  }
  {
    const auto m = train_value(eps, HorizonMode::finite, cfg);
    std::stringstream s;
    write_value(s, m);
    const auto back = read_value(s);
    CHECK(back.mode == HorizonMode::finite);
    CHECK(back.net == m.net);
    CHECK(make_estimator(back)->signals(eps[2]) == make_estimator(m)->signals(eps[2]));
  }
  {
    const auto m = train_q_stopping(eps, cfg);
    std::stringstream s;
    write_q_stopping(s, m);
    CHECK(read_q_stopping(s).net == m.net);
  }
  std::istringstream junk("nonsense");
  CHECK_THROWS(read_brr(junk));
}

}
