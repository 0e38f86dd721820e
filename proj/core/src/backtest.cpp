#include "tdse/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tdse/csv.hpp"
#include "tdse/error.hpp"
#include "tdse/rng.hpp"

namespace tdse::backtest {

namespace {

void check_series(std::span<const Date> dates, std::span<const double> closes) {
  if (dates.size() != closes.size()) throw Error(ErrorCode::LengthMismatch, "backtest: dates and closes differ in length");
  if (closes.size() < 2) throw Error(ErrorCode::SeriesTooShort, "backtest needs at least 2 closes");
  for (double c : closes) {
    if (!(c > 0.0)) throw Error(ErrorCode::NonPositivePrice, "backtest: close must be positive");
  }
}

double sharpe(std::span<const double> r) {
  if (r.size() < 2) return 0.0;
  const double n = static_cast<double>(r.size());
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : r) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  return sd > 0.0 ? mean / sd : 0.0;
}

}  // namespace

EquityCurve run_signal_strategy(std::span<const Date> dates, std::span<const double> closes,
                                std::span<const int> signals) {
  check_series(dates, closes);
  if (signals.size() + 1 != closes.size()) {
    throw Error(ErrorCode::LengthMismatch, "backtest: need one signal per day after the first close");
  }
  EquityCurve c;
  c.dates.assign(dates.begin(), dates.end());
  c.values.reserve(closes.size());
  c.positions.reserve(closes.size());
  c.values.push_back(1.0);
  c.positions.push_back(Position::Cash);
  for (std::size_t t = 1; t < closes.size(); ++t) {
    const bool long_day = signals[t - 1] != 0;
    c.values.push_back(long_day ? c.values.back() * (closes[t] / closes[t - 1]) : c.values.back());
    c.positions.push_back(long_day ? Position::Long : Position::Cash);
  }
  return c;
}

EquityCurve buy_and_hold(std::span<const Date> dates, std::span<const double> closes) {
  check_series(dates, closes);
  const std::vector<int> up(closes.size() - 1, 1);
  return run_signal_strategy(dates, closes, up);
}

EquityCurve random_strategy(std::span<const Date> dates, std::span<const double> closes, std::uint64_t seed) {
  check_series(dates, closes);
  Rng rng(seed);
  std::vector<int> s(closes.size() - 1);
  for (auto& v : s) v = rng.bernoulli(0.5) ? 1 : 0;
  return run_signal_strategy(dates, closes, s);
}

EquityCurve perfect_foresight(std::span<const Date> dates, std::span<const double> closes) {
  check_series(dates, closes);
  std::vector<int> s(closes.size() - 1);
  for (std::size_t t = 1; t < closes.size(); ++t) s[t - 1] = closes[t] > closes[t - 1] ? 1 : 0;
  return run_signal_strategy(dates, closes, s);
}

EconReport econ_metrics(const EquityCurve& curve, SharpeBasis basis) {
  if (curve.values.empty()) throw Error(ErrorCode::EmptyCurve, "econ metrics: empty equity curve");
  if (curve.dates.size() != curve.values.size()) {
    throw Error(ErrorCode::LengthMismatch, "econ metrics: dates and values differ in length");
  }
  EconReport r;
  const auto& v = curve.values;
  r.accumulative_return = v.back() - 1.0;

  std::vector<double> daily;
  for (std::size_t t = 1; t < v.size(); ++t) daily.push_back(v[t] / v[t - 1] - 1.0);
  if (!daily.empty()) r.daily_return = std::accumulate(daily.begin(), daily.end(), 0.0) / static_cast<double>(daily.size());

  std::vector<double> monthly;
  for (std::size_t i = 0; i < v.size();) {
    const int m = month_index(curve.dates[i]);
    std::size_t j = i;
    while (j + 1 < v.size() && month_index(curve.dates[j + 1]) == m) ++j;
    monthly.push_back(v[j] / v[i] - 1.0);
    i = j + 1;
  }
  r.monthly_return = std::accumulate(monthly.begin(), monthly.end(), 0.0) / static_cast<double>(monthly.size());
  r.sharpe_ratio = basis == SharpeBasis::Monthly ? sharpe(monthly) : sharpe(daily);

  double peak = v.front();
  for (double x : v) {
    peak = std::max(peak, x);
    r.max_drawdown = std::max(r.max_drawdown, 1.0 - x / peak);
  }
  return r;
}

void write_equity_csv(std::ostream& out, const EquityCurve& curve) {
  out << "date,value,position\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << format_date(curve.dates[i]) << ',' << csv::format_double(curve.values[i]) << ','
        << (curve.positions[i] == Position::Long ? "Long" : "Cash") << '\n';
  }
}

}  // namespace tdse::backtest
