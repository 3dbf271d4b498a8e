#include "fxliq/pipeline.hpp"

#include "fxliq/baselines.hpp"
#include "fxliq/rl_il.hpp"
#include "fxliq/stopping.hpp"
#include "fxliq/topk.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fxliq {

// --- configuration -------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (auto t = trim(item); !t.empty()) out.push_back(t);
  return out;
}

long parse_long(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0') throw std::invalid_argument("config: " + key + " expects an integer, got '" + v + "'");
  return x;
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: " + key + " expects true/false, got '" + v + "'");
}

std::vector<int> parse_ints(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& item : split_list(v)) out.push_back(static_cast<int>(parse_long(key, item)));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::ostringstream out;
  for (std::size_t i = 0; i < items.size(); ++i) out << (i ? "," : "") << items[i];
  return out.str();
}

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "pairs") cfg.pairs = split_list(v);
  else if (key == "data") cfg.data = v;
  else if (key == "data_dir") cfg.data_dir = v;
  else if (key == "horizon") cfg.horizon = static_cast<int>(parse_long(key, v));
  else if (key == "shift") cfg.shift = static_cast<int>(parse_long(key, v));
  else if (key == "validation_start") cfg.validation_start = v;
  else if (key == "test_start") cfg.test_start = v;
  else if (key == "window") cfg.window = static_cast<int>(parse_long(key, v));
  else if (key == "k") cfg.k = static_cast<int>(parse_long(key, v));
  else if (key == "focal_gamma") cfg.focal_gamma = parse_double(key, v);
  else if (key == "augment") cfg.augment = static_cast<int>(parse_long(key, v));
  else if (key == "window_grid") cfg.window_grid = parse_ints(key, v);
  else if (key == "k_grid") cfg.k_grid = parse_ints(key, v);
  else if (key == "tune") cfg.tune = parse_bool(key, v);
  else if (key == "at_window") cfg.at_window = static_cast<int>(parse_long(key, v));
  else if (key == "at_candidates") cfg.at_candidates = static_cast<int>(parse_long(key, v));
  else if (key == "no_at") cfg.no_at = parse_bool(key, v);
  else if (key == "hidden") cfg.hidden = parse_ints(key, v);
  else if (key == "learning_rate") cfg.learning_rate = parse_double(key, v);
  else if (key == "batch_size") cfg.batch_size = static_cast<int>(parse_long(key, v));
  else if (key == "epochs") cfg.epochs = static_cast<int>(parse_long(key, v));
  else if (key == "sync_every") cfg.sync_every = static_cast<int>(parse_long(key, v));
  else if (key == "dqn_steps") cfg.dqn_steps = parse_long(key, v);
  else if (key == "dqn_warmup") cfg.dqn_warmup = parse_long(key, v);
  else if (key == "replay_capacity") cfg.replay_capacity = static_cast<std::size_t>(parse_long(key, v));
  else if (key == "balance_weighted_rewards") cfg.balance_weighted_rewards = parse_bool(key, v);
  else if (key == "revenue") cfg.revenue = v;
  else if (key == "raw_acr") cfg.raw_acr = parse_bool(key, v);
  else if (key == "split") cfg.split = v;
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_long(key, v));
  else if (key == "out_dir") cfg.out_dir = v;
  else if (key == "reuse") cfg.reuse = parse_bool(key, v);
  else if (key == "jobs") cfg.jobs = static_cast<int>(parse_long(key, v));
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

void apply_config_text(RunConfig& cfg, std::istream& in) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value at line " + std::to_string(line_no));
    apply_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void write_config(std::ostream& out, const RunConfig& cfg) {
  out << "pairs = " << join(cfg.pairs) << '\n'
      << "data = " << cfg.data << '\n'
      << "data_dir = " << cfg.data_dir << '\n'
      << "horizon = " << cfg.horizon << '\n'
      << "shift = " << cfg.shift << '\n'
      << "validation_start = " << cfg.validation_start << '\n'
      << "test_start = " << cfg.test_start << '\n'
      << "window = " << cfg.window << '\n'
      << "k = " << cfg.k << '\n'
      << "focal_gamma = " << exact(cfg.focal_gamma) << '\n'
      << "augment = " << cfg.augment << '\n'
      << "window_grid = " << join(cfg.window_grid) << '\n'
      << "k_grid = " << join(cfg.k_grid) << '\n'
      << "tune = " << (cfg.tune ? "true" : "false") << '\n'
      << "at_window = " << cfg.at_window << '\n'
      << "at_candidates = " << cfg.at_candidates << '\n'
      << "no_at = " << (cfg.no_at ? "true" : "false") << '\n'
      << "hidden = " << join(cfg.hidden) << '\n'
      << "learning_rate = " << exact(cfg.learning_rate) << '\n'
      << "batch_size = " << cfg.batch_size << '\n'
      << "epochs = " << cfg.epochs << '\n'
      << "sync_every = " << cfg.sync_every << '\n'
      << "dqn_steps = " << cfg.dqn_steps << '\n'
      << "dqn_warmup = " << cfg.dqn_warmup << '\n'
      << "replay_capacity = " << cfg.replay_capacity << '\n'
      << "balance_weighted_rewards = " << (cfg.balance_weighted_rewards ? "true" : "false") << '\n'
      << "revenue = " << cfg.revenue << '\n'
      << "raw_acr = " << (cfg.raw_acr ? "true" : "false") << '\n'
      << "split = " << cfg.split << '\n'
      << "seed = " << cfg.seed << '\n'
      << "out_dir = " << cfg.out_dir << '\n'
      << "reuse = " << (cfg.reuse ? "true" : "false") << '\n'
      << "jobs = " << cfg.jobs << '\n';
}

void validate(const RunConfig& cfg) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (cfg.pairs.empty()) fail("no currency pairs");
  if (cfg.horizon < 2) fail("horizon must be >= 2");
  if (cfg.shift < 1) fail("shift must be >= 1");
  const auto v = parse_date(cfg.validation_start), t = parse_date(cfg.test_start);
  if (!v || !t) fail("split boundaries must be YYYY-MM-DD dates");
  if (!(*v < *t)) fail("validation_start must precede test_start");
  if (cfg.window < 1) fail("window must be >= 1");
  if (cfg.k < 1) fail("k must be >= 1");
  if (cfg.focal_gamma < 0) fail("focal_gamma must be >= 0");
  if (cfg.augment < 0) fail("augment must be >= 0");
  if (cfg.window_grid.empty() || cfg.k_grid.empty()) fail("grids must be non-empty");
  for (int w : cfg.window_grid) if (w < 1) fail("window_grid entries must be >= 1");
  for (int k : cfg.k_grid) if (k < 1) fail("k_grid entries must be >= 1");
  if (cfg.at_window < 1) fail("at_window must be >= 1");
  if (cfg.at_candidates < 2) fail("at_candidates must be >= 2");
  for (int h : cfg.hidden) if (h < 1) fail("hidden widths must be positive");
  if (cfg.learning_rate <= 0) fail("learning_rate must be positive");
  if (cfg.batch_size < 1 || cfg.epochs < 1 || cfg.sync_every < 1) fail("batch_size, epochs, sync_every must be positive");
  if (cfg.dqn_steps < 1 || cfg.dqn_warmup < 0 || cfg.replay_capacity < 1) fail("bad DQN settings");
  if (cfg.revenue != "unit-per-step" && cfg.revenue != "unit-at-start") fail("revenue must be unit-per-step or unit-at-start");
  parse_split(cfg.split);
  if (cfg.out_dir.empty()) fail("out_dir is empty");
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::train;
  if (text == "validation" || text == "val") return Split::validation;
  if (text == "test") return Split::test;
  throw std::invalid_argument("unknown split '" + text + "'");
}

AccountingOptions accounting_options(const RunConfig& cfg) {
  AccountingOptions a;
  a.revenue = cfg.revenue == "unit-at-start" ? RevenueModel::unit_at_start : RevenueModel::unit_per_step;
  a.raw_rates = cfg.raw_acr;
  return a;
}

CalibrationConfig calibration_config(const RunConfig& cfg) {
  CalibrationConfig c;
  c.window = cfg.at_window;
  c.candidates = cfg.at_candidates;
  return c;
}

TrainConfig train_config(const RunConfig& cfg) {
  TrainConfig t;
  t.features.window = cfg.window;
  t.features.augment = cfg.augment;
  t.hidden = cfg.hidden;
  t.learning_rate = cfg.learning_rate;
  t.batch_size = cfg.batch_size;
  t.epochs = cfg.epochs;
  t.sync_every = cfg.sync_every;
  t.seed = cfg.seed;
  return t;
}

// --- method catalog --------------------------------------------------------------

std::vector<std::string> benchmark_methods() {
  return {"sell-at-end",   "sell-immediately", "sell-greedily",   "sell-at",
          "ema-cross:10,20", "rate-vs-ema:10", "rate-vs-ema:100", "ema-cross:50,100",
          "macd-signal",   "macd-signal-pos",  "brr",             "dqn",
          "dqn-rank",      "dqn-binary",       "il",              "il-down",
          "il-focal",      "dp-finite",        "dp-infinite",     "q-stopping",
          "topk"};
}

std::vector<std::string> learned_methods() {
  return {"brr", "dqn", "dqn-rank", "dqn-binary", "il", "il-down", "il-focal",
          "dp-finite", "dp-infinite", "q-stopping", "topk"};
}

bool is_learned_method(const std::string& token) {
  const auto all = learned_methods();
  return std::find(all.begin(), all.end(), token) != all.end();
}

namespace {

std::optional<int> oracle_lookahead(const std::string& token) {
  if (token.rfind("oracle-", 0) != 0) return std::nullopt;
  const std::string digits = token.substr(7);
  char* end = nullptr;
  const long n = std::strtol(digits.c_str(), &end, 10);
  if (digits.empty() || *end != '\0' || n < 1) return std::nullopt;
  return static_cast<int>(n);
}

}  // namespace

bool is_known_method(const std::string& token) {
  return token == "oracle" || oracle_lookahead(token) || token == "sell-at" ||
         is_learned_method(token) || is_baseline_token(token);
}

std::string file_token(const std::string& token) {
  std::string out = token;
  std::replace(out.begin(), out.end(), ':', '_');
  std::replace(out.begin(), out.end(), ',', '_');
  return out;
}

// --- data ----------------------------------------------------------------------

std::vector<Episode> PairData::episodes_in(Split split) const {
  std::vector<Episode> out;
  for (const auto& e : episodes)
    if (e.split == split) out.push_back(e);
  return out;
}

PairData prepare_pair(const RateSeries& series, const RunConfig& cfg) {
  PairData data;
  data.pair = series.pair_name;
  data.series = series;
  const SplitBoundaries bounds{*parse_date(cfg.validation_start), *parse_date(cfg.test_start)};
  data.splits = split_chronological(build_episodes(series, cfg.horizon, cfg.shift), bounds);
  for (const auto* part : {&data.splits.train, &data.splits.validation, &data.splits.test})
    data.episodes.insert(data.episodes.end(), part->begin(), part->end());
  return data;
}

std::string data_path_for(const std::string& pair, const RunConfig& cfg) {
  if (!cfg.data_dir.empty()) return (std::filesystem::path(cfg.data_dir) / (pair + ".csv")).string();
  if (!cfg.data.empty()) return cfg.data;
  const auto ingested = std::filesystem::path(cfg.out_dir) / pair / "rates.csv";
  if (std::filesystem::exists(ingested)) return ingested.string();
  throw std::invalid_argument("no data for " + pair + ": pass --data or --data-dir, or run ingest first");
}

PairData load_pair(const std::string& pair, const RunConfig& cfg) {
  auto loaded = load_rate_series(data_path_for(pair, cfg), pair, static_cast<std::size_t>(cfg.horizon));
  auto data = prepare_pair(loaded.series, cfg);
  data.dropped_rows = loaded.dropped;
  return data;
}

// --- training --------------------------------------------------------------------

namespace {

DqnConfig dqn_config(const RunConfig& cfg, RewardKind kind) {
  DqnConfig d;
  d.train = train_config(cfg);
  d.reward = kind;
  d.env_steps = cfg.dqn_steps;
  d.warmup = cfg.dqn_warmup;
  d.replay_capacity = cfg.replay_capacity;
  d.balance_weighted = cfg.balance_weighted_rewards;
  return d;
}

ImitationConfig imitation_config(const RunConfig& cfg, ImitationVariant variant) {
  ImitationConfig c;
  c.train = train_config(cfg);
  c.variant = variant;
  c.focal_gamma = cfg.focal_gamma;
  return c;
}

RewardKind reward_of(const std::string& token) {
  if (token == "dqn-rank") return RewardKind::ranking;
  if (token == "dqn-binary") return RewardKind::binary;
  return RewardKind::vanilla;
}

ImitationVariant variant_of(const std::string& token) {
  if (token == "il-down") return ImitationVariant::downsample;
  if (token == "il-focal") return ImitationVariant::focal;
  return ImitationVariant::vanilla;
}

}  // namespace

TrainedMethod train_method(const std::string& token, std::span<const Episode> train,
                           const RunConfig& cfg) {
  if (!is_learned_method(token)) throw std::invalid_argument("'" + token + "' is not a learned method");
  std::ostringstream ckpt;
  ckpt << "method " << token << '\n';
  TrainedMethod out;
  out.token = token;
  const auto tc = train_config(cfg);
  if (token == "brr") {
    auto m = train_brr(train, tc);
    write_brr(ckpt, m);
    out.estimator = make_estimator(std::move(m));
  } else if (token == "dp-finite" || token == "dp-infinite") {
    auto m = train_value(train, token == "dp-finite" ? HorizonMode::finite : HorizonMode::infinite, tc);
    write_value(ckpt, m);
    out.estimator = make_estimator(std::move(m));
  } else if (token == "q-stopping") {
    auto m = train_q_stopping(train, tc);
    write_q_stopping(ckpt, m);
    out.estimator = make_estimator(std::move(m));
  } else if (token.rfind("dqn", 0) == 0) {
    auto m = train_dqn(train, dqn_config(cfg, reward_of(token)));
    write_dqn(ckpt, m);
    out.estimator = make_estimator(std::move(m));
  } else if (token.rfind("il", 0) == 0) {
    auto m = train_imitation(train, imitation_config(cfg, variant_of(token)));
    write_imitation(ckpt, m);
    out.estimator = make_estimator(std::move(m));
  } else {
    auto m = train_topk(train, cfg.k, tc);
    write_topk(ckpt, m);
    out.estimator = make_estimator(std::move(m));
  }
  out.checkpoint = ckpt.str();
  return out;
}

TrainedMethod load_method(const std::string& token, const std::string& checkpoint) {
  std::istringstream in(checkpoint);
  std::string tag, stored;
  if (!(in >> tag >> stored) || tag != "method")
    throw std::runtime_error("checkpoint: missing method header");
  if (stored != token)
    throw std::runtime_error("checkpoint: holds '" + stored + "', expected '" + token + "'");
  TrainedMethod out;
  out.token = token;
  out.checkpoint = checkpoint;
  if (token == "brr") out.estimator = make_estimator(read_brr(in));
  else if (token == "dp-finite" || token == "dp-infinite") out.estimator = make_estimator(read_value(in));
  else if (token == "q-stopping") out.estimator = make_estimator(read_q_stopping(in));
  else if (token.rfind("dqn", 0) == 0) out.estimator = make_estimator(read_dqn(in));
  else if (token.rfind("il", 0) == 0) out.estimator = make_estimator(read_imitation(in));
  else if (token == "topk") out.estimator = make_estimator(read_topk(in));
  else throw std::invalid_argument("'" + token + "' is not a learned method");
  return out;
}

// --- evaluation ------------------------------------------------------------------

MethodResults evaluate_method(const std::string& token, const PairData& data, Split split,
                              const RunConfig& cfg, const TrainedMethod* trained) {
  MethodResults out;
  out.method = token;
  out.pair = data.pair;
  const auto acct = accounting_options(cfg);
  const auto calib = calibration_config(cfg);
  const std::span<const Episode> all(data.episodes);

  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < all.size(); ++i)
    if (all[i].split == split) targets.push_back(i);
  if (targets.empty()) throw std::invalid_argument("evaluate: no episodes in split " + to_string(split));

  Policy direct;
  if (token == "oracle") {
    direct = oracle_policy;
  } else if (const auto n = oracle_lookahead(token)) {
    direct = [n = *n](const Episode& e, int t) { return oracle_n_policy(e, t, n); };
  } else if (is_baseline_token(token)) {
    direct = parse_baseline_policy(token);
  }
  if (direct) {
    for (auto i : targets) out.results.push_back(run_episode(direct, all[i], acct, token));
    return out;
  }

  const bool rate_mode = token == "sell-at";
  if (!rate_mode) {
    if (!is_learned_method(token)) throw std::invalid_argument("unknown method token '" + token + "'");
    if (!trained || !trained->estimator) throw std::invalid_argument("evaluate: " + token + " needs a trained model");
  }

  // Per-episode values the threshold compares against, computed lazily.
  std::vector<std::optional<Eigen::VectorXd>> values(all.size());
  auto value_of = [&](std::size_t i) -> const Eigen::VectorXd& {
    if (!values[i]) values[i] = rate_mode ? all[i].norm_rates : trained->estimator->signals(all[i]);
    return *values[i];
  };
  const auto mode = rate_mode ? ThresholdMode::rate : ThresholdMode::signal;

  for (auto i : targets) {
    ThresholdRule rule{mode, rate_mode ? 1.0 : 0.0};
    if (!cfg.no_at) {
      const auto window = history_window(all, all[i], calib.window);
      std::vector<Episode> history;
      std::vector<Eigen::VectorXd> history_values;
      for (auto h : window) {
        history.push_back(all[h]);
        history_values.push_back(value_of(h));
      }
      rule = calibrate_threshold(history, history_values, mode, calib, acct).rule;
    }
    out.results.push_back(
        run_episode(threshold_policy(rule, value_of(i)), all[i], acct, token, rule.delta));
  }
  return out;
}

GridSearchResult grid_search(const std::string& token, const PairData& data, const RunConfig& cfg) {
  if (!is_learned_method(token)) throw std::invalid_argument("grid-search: '" + token + "' has no hyperparameters");
  const auto train = data.episodes_in(Split::train);
  GridSearchResult out;
  const std::vector<int> ks = token == "topk" ? cfg.k_grid : std::vector<int>{cfg.k};
  for (int window : cfg.window_grid) {
    for (int k : ks) {
      RunConfig point = cfg;
      point.window = window;
      point.k = k;
      const auto trained = train_method(token, train, point);
      const auto res = evaluate_method(token, data, Split::validation, point, &trained);
      const GridPoint p{window, k, acr(res.results)};
      if (out.points.empty() || p.validation_acr > out.best.validation_acr) out.best = p;
      out.points.push_back(p);
    }
  }
  return out;
}

}  // namespace fxliq
