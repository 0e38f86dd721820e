#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tdse/dates.hpp"

namespace tdse::data {

struct Bar {
  Date date;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
  double volume = 0.0;
  double value = 0.0;

  friend bool operator==(const Bar&, const Bar&) = default;
};

/// Daily OHLCV bars of one instrument. Dates strictly increasing, prices > 0.
struct MarketSeries {
  std::string symbol;
  std::vector<Bar> rows;

  std::size_t size() const { return rows.size(); }
  friend bool operator==(const MarketSeries&, const MarketSeries&) = default;
};

enum class ReturnKind { OpenToClose, CloseToClose, CloseToOpen };

const char* to_string(ReturnKind kind);
ReturnKind parse_return_kind(std::string_view text);

struct ReturnPoint {
  Date date;
  double value = 0.0;
};

struct ReturnSeries {
  std::string symbol;
  ReturnKind kind = ReturnKind::CloseToClose;
  std::vector<ReturnPoint> values;
};

enum class Direction { Down = 0, Up = 1 };

inline int as_int(Direction d) { return d == Direction::Up ? 1 : 0; }

/// Zero returns label as Down unless the caller asks otherwise.
enum class TieRule { ZeroIsDown, ZeroIsUp };

/// Movement from `date` to the next trading day.
struct DirectionLabel {
  Date date;
  Direction direction = Direction::Down;
  double raw_return = 0.0;
};

enum class Branch { Asia, Europe, Americas, Target, Pre };

inline constexpr std::size_t kBranchCount = 5;

const char* to_string(Branch branch);
Branch parse_branch(std::string_view text);

struct BranchAssignment {
  Branch branch = Branch::Asia;
  std::vector<std::string> symbols;
  ReturnKind return_kind = ReturnKind::CloseToClose;
};

/// Reads the branch config:
///
///     # comment
///     [Asia]
///     symbols = N225, HSI
///     returns = CloseToClose
///
/// All five branches must be present and no symbol may appear twice.
std::vector<BranchAssignment> parse_branch_config(std::istream& in);
std::vector<BranchAssignment> load_branch_config(const std::filesystem::path& path);
void write_branch_config(std::ostream& out, std::span<const BranchAssignment> branches);

/// Half-open range of calendar indices [begin, end).
struct DayRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  friend bool operator==(const DayRange&, const DayRange&) = default;
};

struct WindowSplit {
  std::size_t index = 0;  // 1-based
  DayRange extractor_train;
  DayRange meta_train;
  DayRange test;
  /// Part of `test` not already covered by the previous window's test range.
  /// Scored ranges of consecutive windows tile the evaluation period.
  DayRange scored;
};

struct WindowConfig {
  std::size_t count = 10;
  int train_months = 11;
  int test_months = 3;
  double extractor_fraction = 0.8;
};

/// Column names for each logical OHLCV field.
struct OhlcvSchema {
  std::string date = "date";
  std::string open = "open";
  std::string high = "high";
  std::string low = "low";
  std::string close = "close";
  std::string volume = "volume";
  std::string value = "value";
};

MarketSeries parse_ohlcv_csv(std::istream& in, const std::string& symbol, const OhlcvSchema& schema = {},
                             const std::string& source = "<stream>");
MarketSeries load_ohlcv_csv(const std::filesystem::path& path, const OhlcvSchema& schema = {});
void write_ohlcv_csv(std::ostream& out, const MarketSeries& series);

ReturnSeries compute_returns(const MarketSeries& series, ReturnKind kind);

std::vector<DirectionLabel> make_labels(const MarketSeries& series, TieRule tie = TieRule::ZeroIsDown);

std::vector<WindowSplit> build_windows(std::span<const Date> calendar, const WindowConfig& config);

/// Table of daily industry index returns (fractions), one column per industry.
/// Empty cells are missing observations.
struct IndustryTable {
  std::vector<std::string> names;
  std::vector<Date> dates;
  std::vector<std::vector<std::optional<double>>> rows;  // [day][industry]
};

IndustryTable parse_industry_csv(std::istream& in, const std::string& source = "<stream>");
IndustryTable load_industry_csv(const std::filesystem::path& path);
void write_industry_csv(std::ostream& out, const IndustryTable& table);

/// One row per day; positive + negative + neutral = 1.
struct SentimentRow {
  Date date;
  double positive = 1.0 / 3.0;
  double negative = 1.0 / 3.0;
  double neutral = 1.0 / 3.0;
  std::size_t news_count = 0;
};

struct SentimentIndexSeries {
  std::string provider;
  std::vector<SentimentRow> rows;
};

SentimentIndexSeries parse_sentiment_csv(std::istream& in, const std::string& provider,
                                         const std::string& source = "<stream>");
SentimentIndexSeries load_sentiment_csv(const std::filesystem::path& path, const std::string& provider);
void write_sentiment_csv(std::ostream& out, const SentimentIndexSeries& series);

enum class MissingPolicy { Ffill, Drop };

const char* to_string(MissingPolicy policy);
MissingPolicy parse_missing_policy(std::string_view text);

struct AlignmentPolicy {
  MissingPolicy global = MissingPolicy::Ffill;
  MissingPolicy industry = MissingPolicy::Ffill;
};

struct AlignmentReport {
  std::size_t global_filled = 0;
  std::size_t global_missing = 0;
  std::size_t industry_filled = 0;
  std::size_t industry_missing = 0;
  std::size_t sentiment_default_days = 0;
  std::size_t sentiment_rows_ignored = 0;
};

/// Return series of one global symbol, aligned on the target calendar.
struct GlobalSource {
  std::string symbol;
  Branch branch = Branch::Asia;
  ReturnKind kind = ReturnKind::CloseToClose;
  std::vector<std::optional<double>> values;
};

/// Everything aligned on the target market's trading calendar.
struct MultiSourceDataset {
  MarketSeries target;
  std::vector<Date> calendar;
  std::vector<GlobalSource> global;
  std::vector<std::string> industry_names;
  std::vector<std::vector<std::optional<double>>> industry;  // [day][industry]
  std::vector<SentimentIndexSeries> sentiment;               // rows[day] aligned to calendar
  std::vector<DirectionLabel> labels;
  AlignmentReport report;
};

/// Carries the last observation at or before each calendar day (Ffill) or
/// leaves the day missing (Drop). Days before the first observation are
/// missing under both policies.
std::vector<std::optional<double>> align_to_calendar(std::span<const Date> calendar, const ReturnSeries& series,
                                                     MissingPolicy policy, std::size_t* filled = nullptr);

MultiSourceDataset build_dataset(MarketSeries target, std::span<const BranchAssignment> branches,
                                 const std::map<std::string, MarketSeries>& global_series,
                                 const IndustryTable& industry, std::vector<SentimentIndexSeries> sentiment,
                                 const AlignmentPolicy& policy = {}, TieRule tie = TieRule::ZeroIsDown);

struct LagConfig {
  std::size_t global = 1;
  std::size_t industry = 5;
  std::size_t sentiment = 1;
  std::size_t market = 1;
};

/// Dense [sample][lag][column] block; lag 0 is the day before the label day.
struct FeatureBlock {
  std::string name;
  std::size_t lag = 0;
  std::size_t width = 0;
  std::vector<double> values;

  double at(std::size_t sample, std::size_t l, std::size_t col) const {
    return values[(sample * lag + l) * width + col];
  }
};

inline constexpr std::size_t kMarketFeatureCount = 6;
inline constexpr std::size_t kSentimentFeatureCount = 4;

/// Market features of one day, computed from that day's bar only:
/// open/close - 1, high/close - 1, low/close - 1, open-to-close return,
/// log(1 + volume), log(1 + value).
std::array<double, kMarketFeatureCount> market_features(const Bar& bar);

struct SampleMatrix {
  /// Sample n predicts the move close[d-1] -> close[d] where d = day[n];
  /// every feature comes from days d-1, d-2, ... .
  std::vector<std::size_t> day;
  std::vector<Date> label_date;
  std::vector<Date> earliest_feature_date;
  std::vector<Date> latest_feature_date;
  std::vector<Direction> labels;
  std::vector<double> raw_returns;

  std::vector<Branch> branch_of_block;
  std::vector<std::vector<std::string>> branch_symbols;
  std::vector<FeatureBlock> branches;   // one per branch, width = symbols in branch
  FeatureBlock industry;                // width = industries
  std::vector<std::string> providers;
  std::vector<FeatureBlock> sentiment;  // one per provider, width = 4
  FeatureBlock market;                  // width = 6

  std::size_t size() const { return day.size(); }
  /// Indices of samples whose label day lies in `range`.
  std::vector<std::size_t> samples_in(const DayRange& range) const;
};

SampleMatrix assemble_features(const MultiSourceDataset& dataset, const LagConfig& lags = {});

}  // namespace tdse::data
