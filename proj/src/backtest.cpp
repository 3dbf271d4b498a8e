#include "fxliq/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>

namespace fxliq {

double revenue_at(RevenueModel model, int t) {
  switch (model) {
    case RevenueModel::unit_per_step: return 1.0;
    case RevenueModel::unit_at_start: return t == 0 ? 1.0 : 0.0;
  }
  return 0.0;
}

EpisodeResult run_episode(const Policy& policy, const Episode& episode,
                          const AccountingOptions& options, const std::string& method,
                          double threshold) {
  const int T = episode.horizon();
  EpisodeResult result;
  result.episode_id = episode.id;
  result.method = method;
  result.threshold_used = threshold;
  AccountingState acct;
  double sold = 0.0;
  for (int t = 0; t < T; ++t) {
    acct.t = t;
    const double incoming = revenue_at(options.revenue, t);
    acct.fc_balance += incoming;
    result.total_received += incoming;
    const Action action = policy(episode, t);
    if (action != Action::hold && action != Action::sell)
      throw std::invalid_argument("run_episode: policy emitted a non-binary action");
    if (action == Action::sell && t < T - 1) ++result.sell_signals;
    const bool liquidate = action == Action::sell || t == T - 1;
    if (liquidate && acct.fc_balance > 0.0) {
      const double rate = episode.norm_rates(t);
      acct.hc_earned += acct.fc_balance * (options.raw_rates ? rate : rate - 1.0);
      result.sell_times.push_back(t);
      result.units_sold.push_back(acct.fc_balance);
      sold += acct.fc_balance;
      acct.fc_balance = 0.0;
    }
    if (acct.fc_balance < 0.0 || sold > result.total_received)
      throw std::logic_error("run_episode: short sale");
  }
  result.cumulative_reward = acct.hc_earned;
  return result;
}

Action oracle_policy(const Episode& episode, int t) {
  const int T = episode.horizon();
  if (t < 0 || t >= T) throw std::out_of_range("oracle_policy: t out of range");
  if (t == T - 1) return Action::sell;
  return episode.norm_rates(t) >= episode.norm_rates.tail(T - 1 - t).maxCoeff() ? Action::sell
                                                                                 : Action::hold;
}

Action oracle_n_policy(const Episode& episode, int t, int n) {
  const int T = episode.horizon();
  if (t < 0 || t >= T) throw std::out_of_range("oracle_n_policy: t out of range");
  if (n < 0) throw std::invalid_argument("oracle_n_policy: n must be >= 0");
  const int ahead = std::min(n, T - 1 - t);
  if (ahead == 0) return Action::sell;
  return episode.norm_rates(t) >= episode.norm_rates.segment(t + 1, ahead).maxCoeff()
             ? Action::sell
             : Action::hold;
}

double acr(std::span<const EpisodeResult> results) {
  if (results.empty()) throw std::invalid_argument("acr: no results");
  std::vector<const EpisodeResult*> ordered;
  for (const auto& r : results) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](auto* a, auto* b) { return a->episode_id < b->episode_id; });
  double total = 0.0;
  for (const auto* r : ordered) total += r->cumulative_reward;
  return total / static_cast<double>(results.size());
}

double sell_rate(std::span<const EpisodeResult> results, int horizon) {
  if (results.empty() || horizon < 2) return 0.0;
  double sells = 0.0;
  for (const auto& r : results) sells += r.sell_signals;
  return sells / (static_cast<double>(results.size()) * (horizon - 1));
}

bool is_collapsed(std::span<const EpisodeResult> results, int horizon) {
  return !results.empty() && horizon >= 2 && sell_rate(results, horizon) == 1.0;
}

Eigen::VectorXd average_ranks_descending(const Eigen::Ref<const Eigen::VectorXd>& values) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });
  Eigen::VectorXd ranks(n);
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values(order[j + 1]) == values(order[i])) ++j;
    const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks(order[k]) = shared;
    i = j + 1;
  }
  return ranks;
}

RankingTable compare(std::span<const MethodResults> all) {
  if (all.empty()) throw std::invalid_argument("compare: no results");
  std::vector<std::string> methods, pairs;
  for (const auto& m : all) {
    if (std::find(methods.begin(), methods.end(), m.method) == methods.end()) methods.push_back(m.method);
    if (std::find(pairs.begin(), pairs.end(), m.pair) == pairs.end()) pairs.push_back(m.pair);
  }
  std::map<std::pair<std::string, std::string>, const MethodResults*> cell;
  for (const auto& m : all)
    if (!cell.emplace(std::make_pair(m.method, m.pair), &m).second)
      throw std::invalid_argument("compare: duplicate results for " + m.method + "/" + m.pair);

  const auto nm = static_cast<Eigen::Index>(methods.size());
  const auto np = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd acr_m(nm, np), rank_m(nm, np);
  for (Eigen::Index p = 0; p < np; ++p) {
    std::set<int> reference;
    bool have_reference = false;
    for (Eigen::Index m = 0; m < nm; ++m) {
      auto it = cell.find({methods[static_cast<std::size_t>(m)], pairs[static_cast<std::size_t>(p)]});
      if (it == cell.end())
        throw std::invalid_argument("compare: " + methods[static_cast<std::size_t>(m)] +
                                    " has no results for " + pairs[static_cast<std::size_t>(p)]);
      std::set<int> ids;
      for (const auto& r : it->second->results) ids.insert(r.episode_id);
      if (!have_reference) {
        reference = std::move(ids);
        have_reference = true;
      } else if (ids != reference) {
        throw std::invalid_argument("compare: inconsistent episode sets for pair " +
                                    pairs[static_cast<std::size_t>(p)]);
      }
      acr_m(m, p) = acr(it->second->results);
    }
    rank_m.col(p) = average_ranks_descending(acr_m.col(p));
  }
  const Eigen::VectorXd overall = rank_m.rowwise().mean();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(nm));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return overall(a) < overall(b); });
  RankingTable table;
  table.pairs = pairs;
  table.acr.resize(nm, np);
  table.rank.resize(nm, np);
  table.overall_rank.resize(nm);
  for (Eigen::Index i = 0; i < nm; ++i) {
    const auto src = order[static_cast<std::size_t>(i)];
    table.methods.push_back(methods[static_cast<std::size_t>(src)]);
    table.acr.row(i) = acr_m.row(src);
    table.rank.row(i) = rank_m.row(src);
    table.overall_rank(i) = overall(src);
  }
  return table;
}

void add_references(RankingTable& table, std::span<const MethodResults> references) {
  std::vector<std::string> names;
  for (const auto& r : references)
    if (std::find(names.begin(), names.end(), r.method) == names.end()) names.push_back(r.method);
  Eigen::MatrixXd values(static_cast<Eigen::Index>(names.size()), static_cast<Eigen::Index>(table.pairs.size()));
  for (std::size_t m = 0; m < names.size(); ++m)
    for (std::size_t p = 0; p < table.pairs.size(); ++p) {
      const auto it = std::find_if(references.begin(), references.end(), [&](const MethodResults& r) {
        return r.method == names[m] && r.pair == table.pairs[p];
      });
      if (it == references.end())
        throw std::invalid_argument("add_references: " + names[m] + " has no results for " + table.pairs[p]);
      values(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p)) = acr(it->results);
    }
  table.reference_methods = std::move(names);
  table.reference_acr = std::move(values);
}

namespace {

std::string num(double v, const char* fmt = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

void write_results_csv(std::ostream& out, std::span<const MethodResults> all, const std::string& split) {
  out << "method,pair,split,episode_id,cumulative_reward,threshold\n";
  for (const auto& m : all)
    for (const auto& r : m.results)
      out << m.method << ',' << m.pair << ',' << split << ',' << r.episode_id << ','
          << num(r.cumulative_reward) << ',' << num(r.threshold_used) << '\n';
}

void write_summary_csv(std::ostream& out, const RankingTable& table) {
  out << "method,pair,acr\n";
  for (std::size_t m = 0; m < table.methods.size(); ++m)
    for (std::size_t p = 0; p < table.pairs.size(); ++p)
      out << table.methods[m] << ',' << table.pairs[p] << ','
          << num(table.acr(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p))) << '\n';
  for (std::size_t m = 0; m < table.reference_methods.size(); ++m)
    for (std::size_t p = 0; p < table.pairs.size(); ++p)
      out << table.reference_methods[m] << ',' << table.pairs[p] << ','
          << num(table.reference_acr(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p))) << '\n';
  out << "method,overall_rank\n";
  for (std::size_t m = 0; m < table.methods.size(); ++m)
    out << table.methods[m] << ',' << num(table.overall_rank(static_cast<Eigen::Index>(m))) << '\n';
}

void render_table(std::ostream& out, const RankingTable& table) {
  std::size_t width = 6;
  for (const auto& m : table.methods) width = std::max(width, m.size());
  for (const auto& m : table.reference_methods) width = std::max(width, m.size());
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
  out << pad("Method", width);
  for (const auto& p : table.pairs) out << " | " << pad(p, 8);
  out << " | Rank\n";
  out << std::string(width + table.pairs.size() * 11 + 9, '-') << '\n';
  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    out << pad(table.methods[m], width);
    for (std::size_t p = 0; p < table.pairs.size(); ++p)
      out << " | " << pad(num(table.acr(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p)), "%.3f"), 8);
    out << " | " << num(table.overall_rank(static_cast<Eigen::Index>(m)), "%.3f") << '\n';
  }
  for (std::size_t m = 0; m < table.reference_methods.size(); ++m) {
    out << pad(table.reference_methods[m], width);
    for (std::size_t p = 0; p < table.pairs.size(); ++p)
      out << " | " << pad(num(table.reference_acr(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p)), "%.3f"), 8);
    out << " | --\n";
  }
}

}  // namespace fxliq
