#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "tdse/data_model.hpp"
#include "tdse/rng.hpp"

namespace fixtures {

using namespace tdse;

/// Consecutive weekdays starting at `start`.
inline std::vector<Date> weekdays(const std::string& start, std::size_t n) {
  std::vector<Date> out;
  for (Date d = parse_date(start); out.size() < n; d += std::chrono::days{1}) {
    const std::chrono::weekday wd{d};
    if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) out.push_back(d);
  }
  return out;
}

inline data::MarketSeries series(const std::string& symbol, const std::vector<Date>& dates,
                                 const std::vector<double>& closes) {
  data::MarketSeries s;
  s.symbol = symbol;
  for (std::size_t i = 0; i < dates.size(); ++i) {
    data::Bar b;
    b.date = dates[i];
    b.close = closes[i];
    b.open = i ? closes[i - 1] : closes[i];
    b.high = std::max(b.open, b.close) * 1.01;
    b.low = std::min(b.open, b.close) * 0.99;
    b.volume = 1000.0 + static_cast<double>(i);
    b.value = b.volume * b.close;
    s.rows.push_back(b);
  }
  return s;
}

inline std::vector<double> random_walk(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> c{100.0};
  while (c.size() < n) c.push_back(c.back() * (1.0 + 0.01 * rng.normal()));
  return c;
}

/// One symbol per branch, `industries` industries, one provider, all on the
/// same calendar.
inline data::MultiSourceDataset small_dataset(std::size_t days, std::size_t industries = 3,
                                              data::ReturnKind kind = data::ReturnKind::OpenToClose,
                                              std::uint64_t seed = 1) {
  const auto dates = weekdays("2020-01-01", days);
  const auto target = series("T", dates, random_walk(days, seed));
  std::vector<data::BranchAssignment> branches;
  std::map<std::string, data::MarketSeries> global;
  for (std::size_t b = 0; b < data::kBranchCount; ++b) {
    const std::string sym = "G" + std::to_string(b);
    branches.push_back({static_cast<data::Branch>(b), {sym}, kind});
    global.emplace(sym, series(sym, dates, random_walk(days, seed + 10 + b)));
  }
  data::IndustryTable ind;
  ind.dates = dates;
  Rng rng(seed + 99);
  for (std::size_t i = 0; i < industries; ++i) ind.names.push_back("I" + std::to_string(i));
  for (std::size_t d = 0; d < days; ++d) {
    std::vector<std::optional<double>> row;
    for (std::size_t i = 0; i < industries; ++i) row.push_back(0.01 * rng.normal());
    ind.rows.push_back(row);
  }
  data::SentimentIndexSeries s;
  s.provider = "P";
  for (const auto d : dates) s.rows.push_back({d, 0.5, 0.25, 0.25, 4});
  return data::build_dataset(target, branches, global, ind, {s});
}

}  // namespace fixtures
