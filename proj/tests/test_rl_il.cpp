#include "fxliq/backtest.hpp"
#include "fxliq/baselines.hpp"
#include "fxliq/rl_il.hpp"

#include "support.hpp"

#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

using namespace fxliq;
using fxliq::testing::episode_of;
using fxliq::testing::small_config;

namespace {

DqnConfig small_dqn(RewardKind kind, long steps, int window = 2) {
  DqnConfig cfg;
  cfg.train = small_config(window, 1, 3);
  cfg.reward = kind;
  cfg.env_steps = steps;
  cfg.warmup = 200;
  return cfg;
}

// Rises to a random peak, then falls: the oracle sells exactly when the next rate is lower.
std::vector<Episode> unimodal_episodes(int count, int horizon, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> step(0.02, 0.05);
  std::vector<Episode> out;
  for (int i = 0; i < count; ++i) {
    const int peak = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(horizon - 2));
    Eigen::VectorXd x(horizon);
    x(0) = 1.0;
    for (int t = 1; t < horizon; ++t) x(t) = x(t - 1) + (t <= peak ? step(rng) : -step(rng));
    out.push_back(make_episode(i, x));
  }
  return out;
}

}  // namespace

TEST_SUITE("rl-il-learners") {

TEST_CASE("oracle actions examples") {
  const auto a = oracle_actions(episode_of({1.0, 1.2, 0.9}));
  CHECK(a == std::vector<Action>{Action::hold, Action::sell, Action::sell});
  const auto up = oracle_actions(episode_of({1.0, 1.1, 1.2, 1.3}));
  CHECK(up == std::vector<Action>{Action::hold, Action::hold, Action::hold, Action::sell});
  const auto down = oracle_actions(episode_of({1.3, 1.2, 1.1, 1.0}));
  CHECK(down == std::vector<Action>(4, Action::sell));
}

TEST_CASE("oracle actions match a brute-force check") {
  const auto eps = fxliq::testing::random_episodes(1000, 30, 12);
  for (const auto& e : eps) {
    const auto a = oracle_actions(e);
    for (int t = 0; t < 30; ++t) {
      bool sell = true;
      for (int u = t + 1; u < 30; ++u) sell = sell && e.norm_rates(t) >= e.norm_rates(u);
      CHECK((a[static_cast<std::size_t>(t)] == Action::sell) == sell);
    }
  }
}

TEST_CASE("reward kinds") {
  const auto e = episode_of({1.0, 1.2, 0.9});
  CHECK(compute_reward(RewardKind::vanilla, e, 1, Action::hold) == 0.0);
  CHECK(compute_reward(RewardKind::vanilla, e, 1, Action::sell) == e.norm_rates(1));
  CHECK(compute_reward(RewardKind::ranking, e, 1, Action::sell) == 3.0);
  CHECK(compute_reward(RewardKind::ranking, e, 2, Action::sell) == 1.0);
  CHECK(compute_reward(RewardKind::ranking, e, 2, Action::hold) == 0.0);
  CHECK(compute_reward(RewardKind::binary, e, 0, Action::hold) == 1.0);
  CHECK(compute_reward(RewardKind::binary, e, 0, Action::sell) == 0.0);
  CHECK(reverse_rank(e, 0) == 2);
}

TEST_CASE("binary reward totals are bounded by T and reach it only for the oracle") {
  const auto eps = fxliq::testing::random_episodes(200, 15, 9);
  std::mt19937_64 rng(1);
  for (const auto& e : eps) {
    const auto oracle = oracle_actions(e);
    double oracle_total = 0.0, random_total = 0.0;
    bool matches = true;
    for (int t = 0; t < 15; ++t) {
      oracle_total += compute_reward(RewardKind::binary, e, t, oracle[static_cast<std::size_t>(t)]);
      const Action a = rng() % 2 ? Action::sell : Action::hold;
      matches = matches && a == oracle[static_cast<std::size_t>(t)];
      random_total += compute_reward(RewardKind::binary, e, t, a);
    }
    CHECK(oracle_total == 15.0);
    CHECK(random_total <= 15.0);
    if (!matches) CHECK(random_total < 15.0);
  }
}

TEST_CASE("epsilon schedule decays linearly over the first half") {
  DqnConfig cfg;
  cfg.env_steps = 1000;
  CHECK(epsilon_at(cfg, 0) == 1.0);
  CHECK(epsilon_at(cfg, 250) == doctest::Approx(0.525));
  CHECK(epsilon_at(cfg, 500) == doctest::Approx(0.05));
  CHECK(epsilon_at(cfg, 999) == doctest::Approx(0.05));
}

TEST_CASE("replay buffer keeps the newest transitions") {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) buf.push({Eigen::VectorXd::Constant(1, i), Eigen::VectorXd::Constant(1, i), 0, double(i), false});
  CHECK(buf.size() == 3);
  std::mt19937_64 rng(2);
  for (const auto* t : buf.sample(50, rng)) CHECK(t->reward >= 2.0);
  CHECK_THROWS(ReplayBuffer(0));
  ReplayBuffer empty(2);
  CHECK_THROWS(empty.sample(1, rng));
}

TEST_CASE("DQN on one-step episodes learns the immediate rewards") {
  const std::vector<Episode> eps(8, episode_of({1.3}));
  const auto model = train_dqn(eps, small_dqn(RewardKind::vanilla, 3000, 1));
  const auto q = model.q_values(make_state(eps[0], 0, 1));
  CHECK(std::abs(q(1) - 1.0) < 5e-2);
  CHECK(std::abs(q(0)) < 5e-2);
}

TEST_CASE("DQN on constant data values selling at 1.0") {
  const std::vector<Episode> eps(8, fxliq::testing::constant_episode(6));
  const auto model = train_dqn(eps, small_dqn(RewardKind::vanilla, 4000));
  for (int t = 0; t < 6; ++t) CHECK(std::abs(model.q_values(make_state(eps[0], t, 2))(1) - 1.0) < 5e-2);
}

TEST_CASE("DQN decision is the Q difference and matches argmax") {
  QModel model;
  model.features.window = 2;
  model.net = neural::Mlp<double>::zeros({2, 2, 2});
  model.net.layers().back().bias << 0.8, 1.0;
  const auto e = fxliq::testing::constant_episode(3);
  CHECK(dqn_decision(model, make_state(e, 0, 2)).d == doctest::Approx(-0.2).epsilon(1e-12));
  model.net.layers().back().bias << 1.0, 1.0;
  CHECK(dqn_decision(model, make_state(e, 0, 2)).d == 0.0);

  const auto eps = fxliq::testing::random_episodes(20, 10, 3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    model.net = neural::Mlp<double>({2, 6, 2}, seed);
    for (const auto& ep : eps)
      for (int t = 0; t < 10; ++t) {
        const auto s = make_state(ep, t, 2);
        const auto q = model.q_values(s);
        CHECK((dqn_decision(model, s).d < 0.0) == (q(1) > q(0)));
      }
  }
}

TEST_CASE("policy collapse to always-sell is detected") {
  const auto eps = fxliq::testing::random_episodes(10, 12, 4);
  std::vector<EpisodeResult> imm, end;
  for (const auto& e : eps) {
    imm.push_back(run_episode(parse_baseline_policy("sell-immediately"), e));
    end.push_back(run_episode(parse_baseline_policy("sell-at-end"), e));
  }
  CHECK(is_collapsed(imm, 12));
  CHECK(sell_rate(imm, 12) == 1.0);
  CHECK_FALSE(is_collapsed(end, 12));
  CHECK(sell_rate(end, 12) == 0.0);
}

TEST_CASE("DQN checkpoints round trip") {
  const auto eps = fxliq::testing::random_episodes(5, 6, 2);
  const auto m = train_dqn(eps, small_dqn(RewardKind::ranking, 300));
  std::stringstream s;
  write_dqn(s, m);
  const auto back = read_dqn(s);
  CHECK(back.reward == RewardKind::ranking);
  CHECK(back.net == m.net);
}

TEST_CASE("imitation rejects single-class labels") {
  std::vector<Episode> eps;
  for (int i = 0; i < 5; ++i) eps.push_back(episode_of({1.3, 1.2, 1.1, 1.0}, i));
  ImitationConfig cfg;
  cfg.train = small_config(2, 2);
  CHECK_THROWS_AS(train_imitation(eps, cfg), std::invalid_argument);
}

TEST_CASE("imitation separates a separable fixture") {
  const auto eps = unimodal_episodes(60, 12, 5);
  ImitationConfig cfg;
  cfg.train = small_config(1, 30);
  cfg.train.features.augment = 1;
  const auto model = train_imitation(eps, cfg);
  int right = 0, total = 0;
  for (const auto& e : eps) {
    const auto oracle = oracle_actions(e);
    for (int t = 0; t < 11; ++t, ++total) {
      const auto s = make_state(e, t, 1, 1);
      right += (il_decision(model, s).d < 0.0) == (oracle[static_cast<std::size_t>(t)] == Action::sell);
    }
  }
  CHECK(static_cast<double>(right) / total > 0.95);
}

TEST_CASE("downsampling balances each epoch") {
  std::vector<int> labels(100, 0);
  for (int i = 0; i < 100; i += 7) labels[static_cast<std::size_t>(i)] = 1;
  std::mt19937_64 rng(1);
  for (int epoch = 0; epoch < 5; ++epoch) {
    const auto idx = balanced_epoch_indices(labels, rng);
    int pos = 0, neg = 0;
    for (auto i : idx) (labels[static_cast<std::size_t>(i)] ? pos : neg)++;
    CHECK(pos == neg);
    CHECK(pos == 15);
    std::set<Eigen::Index> unique(idx.begin(), idx.end());
    CHECK(unique.size() == idx.size());
  }
}

TEST_CASE("imitation decision maps probability to d") {
  ImitationModel model;
  model.features.window = 1;
  model.net = neural::Mlp<double>::zeros({1, 2, 1});
  const auto e = fxliq::testing::constant_episode(2);
  CHECK(il_decision(model, make_state(e, 0, 1)).d == 0.0);
  model.net.layers().back().bias(0) = std::log(0.9 / 0.1);
  CHECK(il_decision(model, make_state(e, 0, 1)).d == doctest::Approx(-0.4).epsilon(1e-12));
  double prev = 1.0;
  for (double logit = -5.0; logit <= 5.0; logit += 0.5) {
    model.net.layers().back().bias(0) = logit;
    const double d = il_decision(model, make_state(e, 0, 1)).d;
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("imitation variants train and round trip") {
  const auto eps = unimodal_episodes(20, 8, 2);
  for (auto v : {ImitationVariant::vanilla, ImitationVariant::downsample, ImitationVariant::focal}) {
    ImitationConfig cfg;
    cfg.train = small_config(2, 2);
    cfg.variant = v;
    const auto m = train_imitation(eps, cfg);
    std::stringstream s;
    write_imitation(s, m);
    const auto back = read_imitation(s);
    CHECK(back.variant == v);
    CHECK(back.net == m.net);
  }
}

}
