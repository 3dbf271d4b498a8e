#include "fxliq/cli.hpp"

#include "fxliq/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <sstream>
#include <thread>

namespace fxliq {

namespace fs = std::filesystem;

namespace {

struct Invocation {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> overrides;  // applied after the config file
  std::string method;
  std::string methods = "all";
  int n = 0;
};

void add_common(CLI::App* sub, Invocation& inv) {
  auto set = [&inv](const char* key) {
    return [&inv, key](const std::string& v) { inv.overrides.emplace_back(key, v); };
  };
  auto flag = [&inv](const char* key) {
    return [&inv, key](std::int64_t) { inv.overrides.emplace_back(key, "true"); };
  };
  sub->add_option("--config", inv.config_file, "key = value config file");
  sub->add_option_function<std::string>("--pair,--pairs", set("pairs"), "currency pair(s), comma separated");
  sub->add_option_function<std::string>("--data", set("data"), "single-pair CSV (date,rate)");
  sub->add_option_function<std::string>("--data-dir", set("data_dir"), "directory of <PAIR>.csv files");
  sub->add_option_function<std::string>("--out", set("out_dir"), "output directory");
  sub->add_option_function<std::string>("--horizon", set("horizon"));
  sub->add_option_function<std::string>("--shift", set("shift"));
  sub->add_option_function<std::string>("--window", set("window"), "state window n");
  sub->add_option_function<std::string>("--k", set("k"), "top-K heads");
  sub->add_option_function<std::string>("--gamma", set("focal_gamma"), "focal loss gamma");
  sub->add_option_function<std::string>("--augment", set("augment"));
  sub->add_option_function<std::string>("--epochs", set("epochs"));
  sub->add_option_function<std::string>("--dqn-steps", set("dqn_steps"));
  sub->add_option_function<std::string>("--seed", set("seed"));
  sub->add_option_function<std::string>("--split", set("split"), "train, validation or test");
  sub->add_option_function<std::string>("--revenue", set("revenue"), "unit-per-step or unit-at-start");
  sub->add_option_function<std::string>("--at-window", set("at_window"));
  sub->add_option_function<std::string>("--at-candidates", set("at_candidates"));
  sub->add_option_function<std::string>("--jobs", set("jobs"));
  sub->add_flag_function("--no-at", flag("no_at"), "fixed threshold instead of adaptive");
  sub->add_flag_function("--raw-acr", flag("raw_acr"), "reward the normalized rate itself");
  sub->add_flag_function("--reuse", flag("reuse"), "load existing checkpoints");
  sub->add_flag_function("--tune", flag("tune"), "grid-search learned methods on validation");
  sub->add_option_function<std::string>(
      "--set",
      [&inv](const std::string& kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value");
        inv.overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
      },
      "override any config key");
  // overrides apply in command-line order, and --set may repeat
  for (auto* opt : sub->get_options())
    if (opt->get_name() != "--config" && opt->get_name() != "--help") opt->trigger_on_parse();
}

RunConfig resolve(const Invocation& inv) {
  RunConfig cfg;
  if (const char* env = std::getenv("FXLIQ_OUT"); env && *env) cfg.out_dir = env;
  if (!inv.config_file.empty()) {
    std::ifstream in(inv.config_file);
    if (!in) throw std::runtime_error("cannot open config file " + inv.config_file);
    apply_config_text(cfg, in);
  }
  for (const auto& [k, v] : inv.overrides) apply_config_value(cfg, k, v);
  validate(cfg);
  return cfg;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  body(out);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path pair_dir(const RunConfig& cfg, const std::string& pair) { return fs::path(cfg.out_dir) / pair; }

fs::path checkpoint_path(const RunConfig& cfg, const std::string& pair, const std::string& token) {
  return pair_dir(cfg, pair) / "checkpoints" / (file_token(token) + ".ckpt");
}

void echo_config(const RunConfig& cfg, const std::string& command) {
  write_file(fs::path(cfg.out_dir) / (command + ".config.txt"), [&](std::ostream& o) { write_config(o, cfg); });
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void require_method(const std::string& token) {
  if (token.empty()) throw std::invalid_argument("missing method token");
  if (!is_known_method(token)) throw std::invalid_argument("unknown method token '" + token + "'");
}

// Trains, or loads when `load_existing` and a checkpoint is on disk. Fresh models are saved.
TrainedMethod obtain_model(const std::string& token, const PairData& data, const RunConfig& cfg,
                           bool load_existing, std::ostream& log) {
  const auto path = checkpoint_path(cfg, data.pair, token);
  if (load_existing && fs::exists(path)) return load_method(token, read_file(path));
  RunConfig chosen = cfg;
  if (cfg.tune) {
    const auto grid = grid_search(token, data, cfg);
    chosen.window = grid.best.window;
    chosen.k = grid.best.k;
    log << data.pair << ' ' << token << ": tuned window=" << chosen.window << " k=" << chosen.k << '\n';
  }
  auto trained = train_method(token, data.splits.train, chosen);
  write_file(path, [&](std::ostream& o) { o << trained.checkpoint; });
  return trained;
}

void run_ingest(const RunConfig& cfg, std::ostream& out) {
  for (const auto& pair : cfg.pairs) {
    const auto loaded = load_rate_series(data_path_for(pair, cfg), pair, static_cast<std::size_t>(cfg.horizon));
    const auto dest = pair_dir(cfg, pair) / "rates.csv";
    fs::create_directories(dest.parent_path());
    write_rate_series(dest, loaded.series);
    out << pair << ": " << loaded.series.rates.size() << " rows, " << loaded.dropped << " dropped -> "
        << dest.string() << '\n';
  }
}

void run_episodes(const RunConfig& cfg, std::ostream& out) {
  for (const auto& pair : cfg.pairs) {
    const auto data = load_pair(pair, cfg);
    const auto dest = pair_dir(cfg, pair) / "episodes.csv";
    write_file(dest, [&](std::ostream& o) { write_episode_store(o, data.episodes); });
    out << pair << ": train " << data.splits.train.size() << ", validation " << data.splits.validation.size()
        << ", test " << data.splits.test.size() << " episodes -> " << dest.string() << '\n';
  }
}

void run_train(const RunConfig& cfg, const std::string& token, std::ostream& out) {
  require_method(token);
  if (!is_learned_method(token)) throw std::invalid_argument("'" + token + "' has nothing to train");
  for (const auto& pair : cfg.pairs) {
    const auto data = load_pair(pair, cfg);
    obtain_model(token, data, cfg, false, out);
    out << pair << ' ' << token << ": checkpoint " << checkpoint_path(cfg, pair, token).string() << '\n';
  }
}

void run_backtest(const RunConfig& cfg, const std::string& token, std::ostream& out) {
  require_method(token);
  const Split split = parse_split(cfg.split);
  for (const auto& pair : cfg.pairs) {
    const auto data = load_pair(pair, cfg);
    std::optional<TrainedMethod> trained;
    if (is_learned_method(token)) trained = obtain_model(token, data, cfg, true, out);
    const auto res = evaluate_method(token, data, split, cfg, trained ? &*trained : nullptr);
    const std::vector<MethodResults> one{res};
    write_file(pair_dir(cfg, pair) / ("results_" + file_token(token) + "_" + cfg.split + ".csv"),
               [&](std::ostream& o) { write_results_csv(o, one, cfg.split); });
    out << token << ',' << pair << ',' << cfg.split << ",acr=" << fmt(acr(res.results)) << '\n';
  }
}

void run_oracle(const RunConfig& cfg, int n, std::ostream& out) {
  const std::string token = n > 0 ? "oracle-" + std::to_string(n) : "oracle";
  run_backtest(cfg, token, out);
}

void run_grid_search(const RunConfig& cfg, const std::string& token, std::ostream& out) {
  require_method(token);
  for (const auto& pair : cfg.pairs) {
    const auto data = load_pair(pair, cfg);
    const auto grid = grid_search(token, data, cfg);
    write_file(pair_dir(cfg, pair) / ("grid_" + file_token(token) + ".csv"), [&](std::ostream& o) {
      o << "window,k,validation_acr\n";
      for (const auto& p : grid.points) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", p.validation_acr);
        o << p.window << ',' << p.k << ',' << buf << '\n';
      }
    });
    out << pair << ' ' << token << ": best window=" << grid.best.window << " k=" << grid.best.k
        << " validation_acr=" << fmt(grid.best.validation_acr) << '\n';
  }
}

struct PairOutcome {
  std::vector<MethodResults> ranked;
  std::vector<MethodResults> references;
  std::string log;
};

PairOutcome compare_pair(const std::string& pair, const std::vector<std::string>& methods, const RunConfig& cfg) {
  PairOutcome outcome;
  std::ostringstream log;
  const auto data = load_pair(pair, cfg);
  const Split split = parse_split(cfg.split);
  for (const auto& token : methods) {
    std::optional<TrainedMethod> trained;
    if (is_learned_method(token)) trained = obtain_model(token, data, cfg, cfg.reuse, log);
    auto res = evaluate_method(token, data, split, cfg, trained ? &*trained : nullptr);
    if (is_learned_method(token) && is_collapsed(res.results, cfg.horizon))
      log << pair << ' ' << token << ": policy collapsed to sell-immediately\n";
    outcome.ranked.push_back(std::move(res));
  }
  outcome.references.push_back(evaluate_method("oracle", data, split, cfg));
  outcome.log = log.str();
  return outcome;
}

void run_compare(const RunConfig& cfg, const std::string& methods_arg, std::ostream& out) {
  std::vector<std::string> methods;
  if (methods_arg == "all") {
    methods = benchmark_methods();
  } else {
    std::stringstream in(methods_arg);
    for (std::string t; std::getline(in, t, ';');)
      if (!t.empty()) methods.push_back(t);
  }
  if (methods.empty()) throw std::invalid_argument("no methods to compare");
  for (const auto& m : methods) {
    require_method(m);
    if (m == "oracle" || m.rfind("oracle-", 0) == 0)
      throw std::invalid_argument("oracles are reported as references, not ranked");
  }

  const std::size_t jobs = cfg.jobs > 0 ? static_cast<std::size_t>(cfg.jobs)
                                        : std::max(1u, std::thread::hardware_concurrency());
  std::vector<PairOutcome> outcomes(cfg.pairs.size());
  for (std::size_t start = 0; start < cfg.pairs.size(); start += jobs) {
    std::vector<std::future<PairOutcome>> running;
    const std::size_t stop = std::min(cfg.pairs.size(), start + jobs);
    for (std::size_t i = start; i < stop; ++i)
      running.push_back(std::async(std::launch::async, compare_pair, cfg.pairs[i], methods, cfg));
    for (std::size_t i = start; i < stop; ++i) outcomes[i] = running[i - start].get();
  }

  std::vector<MethodResults> ranked, references;
  for (auto& o : outcomes) {
    out << o.log;
    std::move(o.ranked.begin(), o.ranked.end(), std::back_inserter(ranked));
    std::move(o.references.begin(), o.references.end(), std::back_inserter(references));
  }
  auto table = compare(ranked);
  add_references(table, references);
  const fs::path root(cfg.out_dir);
  std::vector<MethodResults> everything = ranked;
  everything.insert(everything.end(), references.begin(), references.end());
  write_file(root / ("results_" + cfg.split + ".csv"), [&](std::ostream& o) { write_results_csv(o, everything, cfg.split); });
  write_file(root / ("summary_" + cfg.split + ".csv"), [&](std::ostream& o) { write_summary_csv(o, table); });
  write_file(root / ("table_" + cfg.split + ".txt"), [&](std::ostream& o) { render_table(o, table); });
  render_table(out, table);
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"FX liquidation agents: training, calibration and backtesting"};
  app.require_subcommand(1, 1);
  Invocation inv;

  auto* ingest = app.add_subcommand("ingest", "clean a date,rate CSV into the output directory");
  auto* episodes = app.add_subcommand("episodes", "write the episode store");
  auto* train = app.add_subcommand("train", "train a learned method on the train split");
  auto* backtest = app.add_subcommand("backtest", "evaluate one method on a split");
  auto* cmp = app.add_subcommand("compare", "rank methods across pairs");
  auto* grid = app.add_subcommand("grid-search", "tune window and K on validation");
  auto* oracle = app.add_subcommand("oracle", "perfect-foresight reference");
  for (auto* sub : {ingest, episodes, train, backtest, cmp, grid, oracle}) add_common(sub, inv);
  for (auto* sub : {train, backtest, grid}) sub->add_option("method", inv.method, "method token")->required();
  cmp->add_option("--methods", inv.methods, "'all' or tokens separated by ';'");
  oracle->add_option("--n", inv.n, "look-ahead steps (0: full foresight)")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "fxliq: error: " << e.what() << '\n';
    return e.get_exit_code() ? e.get_exit_code() : 2;
  }

  try {
    const RunConfig cfg = resolve(inv);
    auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    echo_config(cfg, name);
    if (sub == ingest) run_ingest(cfg, out);
    else if (sub == episodes) run_episodes(cfg, out);
    else if (sub == train) run_train(cfg, inv.method, out);
    else if (sub == backtest) run_backtest(cfg, inv.method, out);
    else if (sub == cmp) run_compare(cfg, inv.methods, out);
    else if (sub == grid) run_grid_search(cfg, inv.method, out);
    else run_oracle(cfg, inv.n, out);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "fxliq: error: " << msg << '\n';
    return 1;
  }
  return 0;
}

int dispatch(int argc, const char* const* argv) { return dispatch(argc, argv, std::cout, std::cerr); }

}  // namespace fxliq
