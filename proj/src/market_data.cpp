#include "fxliq/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fxliq {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool is_missing_token(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower.empty() || lower == "null" || lower == "nan" || lower == "na";
}

std::string line_error(const std::string& what, std::size_t line) {
  return "rate series: " + what + " at line " + std::to_string(line);
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  text = trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto digits = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (text[i] < '0' || text[i] > '9') return std::nullopt;
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  const auto y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
  if (!y || !m || !d) return std::nullopt;
  Date date{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
            std::chrono::day{static_cast<unsigned>(*d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "unknown";
}

void validate(const RateSeries& series) {
  if (series.dates.size() != series.rates.size())
    throw std::invalid_argument("rate series: dates and rates differ in length");
  for (std::size_t i = 0; i < series.rates.size(); ++i) {
    if (!std::isfinite(series.rates[i]) || series.rates[i] <= 0.0)
      throw std::invalid_argument("rate series: rate at index " + std::to_string(i) +
                                  " is not positive and finite");
    if (i > 0 && !(series.dates[i - 1] < series.dates[i]))
      throw std::invalid_argument("rate series: dates not strictly increasing at " +
                                  format_date(series.dates[i]));
  }
}

LoadedSeries parse_rate_series(std::istream& in, const std::string& pair, std::size_t min_rows) {
  LoadedSeries out;
  out.series.pair_name = pair;
  std::vector<std::pair<Date, double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto comma = body.find(',');
    if (comma == std::string_view::npos || body.find(',', comma + 1) != std::string_view::npos)
      throw std::runtime_error(line_error("expected two columns `date,rate`", line_no));
    const auto date_field = trim(body.substr(0, comma));
    const auto rate_field = trim(body.substr(comma + 1));
    const auto date = parse_date(date_field);
    if (!date) {
      if (!seen_content) {  // header
        seen_content = true;
        continue;
      }
      throw std::runtime_error(line_error("malformed date '" + std::string(date_field) + "'", line_no));
    }
    seen_content = true;
    if (is_missing_token(rate_field)) {
      ++out.dropped;
      continue;
    }
    const std::string rate_text(rate_field);
    char* end = nullptr;
    const double rate = std::strtod(rate_text.c_str(), &end);
    if (end == rate_text.c_str() || *end != '\0')
      throw std::runtime_error(line_error("malformed rate '" + rate_text + "'", line_no));
    if (!std::isfinite(rate) || rate <= 0.0) {
      ++out.dropped;
      continue;
    }
    rows.emplace_back(*date, rate);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].first == rows[i - 1].first)
      throw std::runtime_error("rate series: duplicate date " + format_date(rows[i].first));
  if (rows.size() < min_rows)
    throw std::runtime_error("rate series: only " + std::to_string(rows.size()) +
                             " valid rows, need at least " + std::to_string(min_rows));
  for (const auto& [d, r] : rows) {
    out.series.dates.push_back(d);
    out.series.rates.push_back(r);
  }
  return out;
}

LoadedSeries load_rate_series(const std::filesystem::path& path, const std::string& pair,
                              std::size_t min_rows) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("rate series: cannot read " + path.string());
  return parse_rate_series(in, pair, min_rows);
}

void write_rate_series(const std::filesystem::path& path, const RateSeries& series) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("rate series: cannot write " + path.string());
  out << "date,rate\n";
  char buf[64];
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", series.rates[i]);
    out << format_date(series.dates[i]) << ',' << buf << '\n';
  }
}

Episode make_episode(int id, const Eigen::VectorXd& raw_rates, Date start, Split split) {
  if (raw_rates.size() < 1) throw std::invalid_argument("episode: empty rate window");
  if (!raw_rates.allFinite() || (raw_rates.array() <= 0.0).any())
    throw std::invalid_argument("episode: rates must be positive and finite");
  Episode e;
  e.id = id;
  e.start_date = start;
  e.end_date = start;
  e.raw_rates = raw_rates;
  e.norm_rates = raw_rates / raw_rates(0);
  e.norm_rates(0) = 1.0;
  e.split = split;
  return e;
}

std::vector<Episode> build_episodes(const RateSeries& series, int horizon, int shift) {
  if (horizon < 2) throw std::invalid_argument("build_episodes: horizon must be >= 2");
  if (shift < 1) throw std::invalid_argument("build_episodes: shift must be >= 1");
  validate(series);
  const auto len = series.size();
  const auto T = static_cast<std::size_t>(horizon);
  if (len < T)
    throw std::invalid_argument("build_episodes: series of length " + std::to_string(len) +
                                " is shorter than horizon " + std::to_string(horizon));
  const std::size_t count = (len - T) / static_cast<std::size_t>(shift) + 1;
  std::vector<Episode> episodes;
  episodes.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t begin = k * static_cast<std::size_t>(shift);
    const Eigen::Map<const Eigen::VectorXd> window(series.rates.data() + begin, horizon);
    Episode e = make_episode(static_cast<int>(k), window, series.dates[begin]);
    e.end_date = series.dates[begin + T - 1];
    e.start_index = begin;
    episodes.push_back(std::move(e));
  }
  return episodes;
}

std::size_t count_non_overlapping(std::span<const Episode> episodes) {
  std::size_t kept = 0;
  std::optional<Date> last_end;
  for (const auto& e : episodes) {
    if (!last_end || *last_end < e.start_date) {
      ++kept;
      last_end = e.end_date;
    }
  }
  return kept;
}

EpisodeSplits split_chronological(std::span<const Episode> episodes,
                                  const SplitBoundaries& boundaries) {
  if (!(boundaries.validation_start < boundaries.test_start))
    throw std::invalid_argument("split: validation boundary must precede test boundary");
  EpisodeSplits out;
  for (const auto& e : episodes) {
    Episode copy = e;
    if (e.start_date < boundaries.validation_start) {
      copy.split = Split::train;
      out.train.push_back(std::move(copy));
    } else if (e.start_date < boundaries.test_start) {
      copy.split = Split::validation;
      out.validation.push_back(std::move(copy));
    } else {
      copy.split = Split::test;
      out.test.push_back(std::move(copy));
    }
  }
  if (out.train.empty()) throw std::invalid_argument("split: train split is empty");
  if (out.validation.empty()) throw std::invalid_argument("split: validation split is empty");
  if (out.test.empty()) throw std::invalid_argument("split: test split is empty");
  return out;
}

State make_state(const Episode& episode, int t, int window, int augment) {
  const int T = episode.horizon();
  if (t < 0 || t >= T)
    throw std::out_of_range("make_state: t=" + std::to_string(t) + " outside [0, " +
                            std::to_string(T) + ")");
  if (window < 1) throw std::invalid_argument("make_state: window must be >= 1");
  if (augment < 0) throw std::invalid_argument("make_state: augment must be >= 0");
  State s;
  s.time_index = t;
  s.horizon = T;
  s.current_rate = episode.norm_rates(t);
  s.window = Eigen::VectorXd::Ones(window);
  const int available = std::min(window, t + 1);
  s.window.tail(available) = episode.norm_rates.segment(t + 1 - available, available);
  if (augment > 0) {
    Eigen::VectorXd future = Eigen::VectorXd::Zero(augment);
    const int ahead = std::min(augment, T - 1 - t);
    if (ahead > 0) future.head(ahead) = episode.norm_rates.segment(t + 1, ahead);
    s.future_actuals = std::move(future);
  }
  return s;
}

void write_episode_store(std::ostream& out, std::span<const Episode> episodes) {
  out << "episode_id,start_date,split,t,raw_rate,norm_rate\n";
  char buf[96];
  for (const auto& e : episodes) {
    const auto start = format_date(e.start_date);
    const auto split = to_string(e.split);
    for (int t = 0; t < e.horizon(); ++t) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g", e.raw_rates(t), e.norm_rates(t));
      out << e.id << ',' << start << ',' << split << ',' << t << ',' << buf << '\n';
    }
  }
}

}  // namespace fxliq
