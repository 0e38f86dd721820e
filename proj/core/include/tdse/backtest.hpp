#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "tdse/dates.hpp"

namespace tdse::backtest {

enum class Position { Cash = 0, Long = 1 };

/// Portfolio value per day, starting at 1. Day 0 is the entry close and is
/// always Cash.
struct EquityCurve {
  std::vector<Date> dates;
  std::vector<double> values;
  std::vector<Position> positions;

  std::size_t size() const { return values.size(); }
  double final_value() const { return values.back(); }
};

/// signals[t - 1] (1 = Up) decides whether day t's close-to-close return
/// accrues, t = 1..n-1. No costs.
EquityCurve run_signal_strategy(std::span<const Date> dates, std::span<const double> closes,
                                std::span<const int> signals);

/// All-Up signals through the same code path.
EquityCurve buy_and_hold(std::span<const Date> dates, std::span<const double> closes);

/// Fair-coin daily signals.
EquityCurve random_strategy(std::span<const Date> dates, std::span<const double> closes, std::uint64_t seed);

/// Signals equal to the realized direction of each day.
EquityCurve perfect_foresight(std::span<const Date> dates, std::span<const double> closes);

enum class SharpeBasis { Monthly, Daily };

struct EconReport {
  double accumulative_return = 0.0;
  double monthly_return = 0.0;
  double sharpe_ratio = 0.0;
  double daily_return = 0.0;
  double max_drawdown = 0.0;
};

/// accumulative = final - 1; daily = mean daily simple return; monthly =
/// mean over calendar months of last/first - 1; Sharpe = mean / sample std of
/// the monthly (or daily) returns with zero risk-free rate, not annualized,
/// and 0 when fewer than two periods or zero spread; drawdown = max of
/// 1 - value / running max.
EconReport econ_metrics(const EquityCurve& curve, SharpeBasis basis = SharpeBasis::Monthly);

/// `date,value,position` with position Long or Cash.
void write_equity_csv(std::ostream& out, const EquityCurve& curve);

}  // namespace tdse::backtest
