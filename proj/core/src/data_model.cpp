#include "tdse/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "tdse/csv.hpp"
#include "tdse/error.hpp"

namespace tdse::data {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingSource, "cannot open '" + path.string() + "'");
  return in;
}

std::string line_context(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line);
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name, const std::string& source) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (csv::trim(header[i]) == name) return i;
  }
  throw Error(ErrorCode::MalformedRow, line_context(source, 1) + ": header lacks column '" + name + "'");
}

Date parse_date_at(std::string_view cell, const std::string& ctx) {
  try {
    return parse_date(csv::trim(cell));
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedRow, ctx + ": " + e.what());
  }
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

const char* to_string(ReturnKind kind) {
  switch (kind) {
    case ReturnKind::OpenToClose: return "OpenToClose";
    case ReturnKind::CloseToClose: return "CloseToClose";
    case ReturnKind::CloseToOpen: return "CloseToOpen";
  }
  return "?";
}

ReturnKind parse_return_kind(std::string_view text) {
  const std::string t = lower(csv::trim(text));
  if (t == "opentoclose" || t == "o-c") return ReturnKind::OpenToClose;
  if (t == "closetoclose" || t == "c-c") return ReturnKind::CloseToClose;
  if (t == "closetoopen" || t == "c-o") return ReturnKind::CloseToOpen;
  throw Error(ErrorCode::InvalidConfig, "unknown return kind '" + std::string(text) + "'");
}

const char* to_string(Branch branch) {
  switch (branch) {
    case Branch::Asia: return "Asia";
    case Branch::Europe: return "Europe";
    case Branch::Americas: return "Americas";
    case Branch::Target: return "Target";
    case Branch::Pre: return "Pre";
  }
  return "?";
}

Branch parse_branch(std::string_view text) {
  const std::string t = lower(csv::trim(text));
  if (t == "asia") return Branch::Asia;
  if (t == "europe") return Branch::Europe;
  if (t == "americas") return Branch::Americas;
  if (t == "target") return Branch::Target;
  if (t == "pre") return Branch::Pre;
  throw Error(ErrorCode::InvalidConfig, "unknown branch '" + std::string(text) + "'");
}

const char* to_string(MissingPolicy policy) { return policy == MissingPolicy::Ffill ? "ffill" : "drop"; }

MissingPolicy parse_missing_policy(std::string_view text) {
  const std::string t = lower(csv::trim(text));
  if (t == "ffill") return MissingPolicy::Ffill;
  if (t == "drop") return MissingPolicy::Drop;
  throw Error(ErrorCode::InvalidConfig, "unknown missing-day policy '" + std::string(text) + "'");
}

std::vector<BranchAssignment> parse_branch_config(std::istream& in) {
  std::vector<BranchAssignment> out;
  std::string line;
  std::size_t line_no = 0;
  while (csv::getline(in, line)) {
    ++line_no;
    const std::string t = csv::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw Error(ErrorCode::InvalidConfig, "branch config line " + std::to_string(line_no));
      BranchAssignment b;
      b.branch = parse_branch(std::string_view(t).substr(1, t.size() - 2));
      out.push_back(std::move(b));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos || out.empty()) {
      throw Error(ErrorCode::InvalidConfig, "branch config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = lower(csv::trim(std::string_view(t).substr(0, eq)));
    const std::string value = csv::trim(std::string_view(t).substr(eq + 1));
    if (key == "symbols") {
      out.back().symbols.clear();
      if (!value.empty()) {
        for (const auto& s : csv::split(value)) {
          const std::string sym = csv::trim(s);
          if (!sym.empty()) out.back().symbols.push_back(sym);
        }
      }
    } else if (key == "returns" || key == "return_kind") {
      out.back().return_kind = parse_return_kind(value);
    } else {
      throw Error(ErrorCode::InvalidConfig, "branch config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }

  std::set<Branch> seen;
  std::set<std::string> symbols;
  for (const auto& b : out) {
    if (!seen.insert(b.branch).second) {
      throw Error(ErrorCode::InvalidConfig, std::string("branch listed twice: ") + to_string(b.branch));
    }
    for (const auto& s : b.symbols) {
      if (!symbols.insert(s).second) throw Error(ErrorCode::InvalidConfig, "symbol in two branches: " + s);
    }
  }
  if (seen.size() != kBranchCount) throw Error(ErrorCode::InvalidConfig, "branch config must list all five branches");
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.branch < b.branch; });
  return out;
}

std::vector<BranchAssignment> load_branch_config(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_branch_config(in);
}

void write_branch_config(std::ostream& out, std::span<const BranchAssignment> branches) {
  for (const auto& b : branches) {
    out << '[' << to_string(b.branch) << "]\nsymbols = ";
    for (std::size_t i = 0; i < b.symbols.size(); ++i) out << (i ? ", " : "") << b.symbols[i];
    out << "\nreturns = " << to_string(b.return_kind) << "\n\n";
  }
}

MarketSeries parse_ohlcv_csv(std::istream& in, const std::string& symbol, const OhlcvSchema& schema,
                             const std::string& source) {
  std::string line;
  if (!csv::getline(in, line)) throw Error(ErrorCode::MalformedRow, source + ": missing header row");
  const auto header = csv::split(line);
  const std::size_t c_date = find_column(header, schema.date, source);
  const std::size_t c_open = find_column(header, schema.open, source);
  const std::size_t c_high = find_column(header, schema.high, source);
  const std::size_t c_low = find_column(header, schema.low, source);
  const std::size_t c_close = find_column(header, schema.close, source);
  const std::size_t c_volume = find_column(header, schema.volume, source);
  const std::size_t c_value = find_column(header, schema.value, source);

  MarketSeries series;
  series.symbol = symbol;
  std::vector<std::size_t> line_of_row;
  std::size_t line_no = 1;
  while (csv::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto ctx = line_context(source, line_no);
    const auto cells = csv::split(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::MalformedRow, ctx + ": expected " + std::to_string(header.size()) + " fields, got " +
                                               std::to_string(cells.size()));
    }
    Bar bar;
    bar.date = parse_date_at(cells[c_date], ctx);
    bar.open = csv::parse_double(cells[c_open], ctx);
    bar.high = csv::parse_double(cells[c_high], ctx);
    bar.low = csv::parse_double(cells[c_low], ctx);
    bar.close = csv::parse_double(cells[c_close], ctx);
    bar.volume = csv::parse_double(cells[c_volume], ctx);
    bar.value = csv::parse_double(cells[c_value], ctx);
    if (bar.open <= 0 || bar.high <= 0 || bar.low <= 0 || bar.close <= 0) {
      throw Error(ErrorCode::NonPositivePrice, ctx + ": prices must be positive");
    }
    if (bar.volume < 0 || bar.value < 0) throw Error(ErrorCode::MalformedRow, ctx + ": negative volume or value");
    series.rows.push_back(bar);
    line_of_row.push_back(line_no);
  }

  std::vector<std::size_t> order(series.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return series.rows[a].date < series.rows[b].date; });
  std::vector<Bar> sorted;
  sorted.reserve(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0 && series.rows[order[k]].date == series.rows[order[k - 1]].date) {
      throw Error(ErrorCode::DuplicateDate, line_context(source, line_of_row[order[k]]) + ": duplicate date " +
                                                format_date(series.rows[order[k]].date));
    }
    sorted.push_back(series.rows[order[k]]);
  }
  series.rows = std::move(sorted);
  return series;
}

MarketSeries load_ohlcv_csv(const std::filesystem::path& path, const OhlcvSchema& schema) {
  auto in = open_input(path);
  return parse_ohlcv_csv(in, path.stem().string(), schema, path.string());
}

void write_ohlcv_csv(std::ostream& out, const MarketSeries& series) {
  out << "date,open,high,low,close,volume,value\n";
  for (const auto& b : series.rows) {
    out << format_date(b.date) << ',' << csv::format_double(b.open) << ',' << csv::format_double(b.high) << ','
        << csv::format_double(b.low) << ',' << csv::format_double(b.close) << ',' << csv::format_double(b.volume)
        << ',' << csv::format_double(b.value) << '\n';
  }
}

ReturnSeries compute_returns(const MarketSeries& series, ReturnKind kind) {
  const std::size_t need = kind == ReturnKind::OpenToClose ? 1 : 2;
  if (series.size() < need) {
    throw Error(ErrorCode::SeriesTooShort, series.symbol + ": need at least " + std::to_string(need) + " rows");
  }
  ReturnSeries out;
  out.symbol = series.symbol;
  out.kind = kind;
  const auto& r = series.rows;
  switch (kind) {
    case ReturnKind::OpenToClose:
      for (const auto& b : r) out.values.push_back({b.date, b.close / b.open - 1.0});
      break;
    case ReturnKind::CloseToClose:
      for (std::size_t t = 1; t < r.size(); ++t) out.values.push_back({r[t].date, r[t].close / r[t - 1].close - 1.0});
      break;
    case ReturnKind::CloseToOpen:
      for (std::size_t t = 1; t < r.size(); ++t) out.values.push_back({r[t].date, r[t].open / r[t - 1].close - 1.0});
      break;
  }
  return out;
}

std::vector<DirectionLabel> make_labels(const MarketSeries& series, TieRule tie) {
  if (series.size() < 2) throw Error(ErrorCode::SeriesTooShort, series.symbol + ": need at least 2 rows for labels");
  std::vector<DirectionLabel> out;
  out.reserve(series.size() - 1);
  for (std::size_t t = 0; t + 1 < series.size(); ++t) {
    const double r = (series.rows[t + 1].close - series.rows[t].close) / series.rows[t].close;
    const bool up = tie == TieRule::ZeroIsDown ? r > 0.0 : r >= 0.0;
    out.push_back({series.rows[t].date, up ? Direction::Up : Direction::Down, r});
  }
  return out;
}

std::vector<WindowSplit> build_windows(std::span<const Date> calendar, const WindowConfig& config) {
  if (config.count == 0 || config.train_months <= 0 || config.test_months <= 0 || config.extractor_fraction <= 0.0 ||
      config.extractor_fraction >= 1.0) {
    throw Error(ErrorCode::InvalidConfig, "invalid window configuration");
  }
  // First calendar index of each distinct month.
  std::vector<std::size_t> month_start;
  for (std::size_t i = 0; i < calendar.size(); ++i) {
    if (i == 0 || month_index(calendar[i]) != month_index(calendar[i - 1])) month_start.push_back(i);
    if (i > 0 && calendar[i] <= calendar[i - 1]) {
      throw Error(ErrorCode::InvalidConfig, "calendar dates must be strictly increasing");
    }
  }
  const long months = static_cast<long>(month_start.size());
  const long span = config.train_months + config.test_months;
  const long slack = months - span;
  const long w = static_cast<long>(config.count);
  if (slack < 0 || (w > 1 && slack < w - 1)) {
    throw Error(ErrorCode::InsufficientHistory, "calendar spans " + std::to_string(months) + " months; " +
                                                    std::to_string(config.count) + " windows of " +
                                                    std::to_string(span) + " months do not fit");
  }
  month_start.push_back(calendar.size());

  std::vector<WindowSplit> out;
  for (long k = 0; k < w; ++k) {
    // round(k * slack / (w - 1)), half up, in integers.
    const long start = w == 1 ? 0 : (2 * k * slack + (w - 1)) / (2 * (w - 1));
    const std::size_t train_begin = month_start[start];
    const std::size_t test_begin = month_start[start + config.train_months];
    const std::size_t test_end = month_start[start + span];
    const std::size_t train_days = test_begin - train_begin;
    const auto ext_days = static_cast<std::size_t>(std::llround(config.extractor_fraction * train_days));

    WindowSplit split;
    split.index = static_cast<std::size_t>(k + 1);
    split.extractor_train = {train_begin, train_begin + ext_days};
    split.meta_train = {train_begin + ext_days, test_begin};
    split.test = {test_begin, test_end};
    split.scored = split.test;
    if (!out.empty()) split.scored.begin = std::max(split.test.begin, out.back().test.end);
    out.push_back(split);
  }
  return out;
}

IndustryTable parse_industry_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!csv::getline(in, line)) throw Error(ErrorCode::MalformedRow, source + ": missing header row");
  const auto header = csv::split(line);
  if (header.size() < 2 || csv::trim(header[0]) != "date") {
    throw Error(ErrorCode::MalformedRow, line_context(source, 1) + ": expected 'date' followed by industry columns");
  }
  IndustryTable table;
  for (std::size_t i = 1; i < header.size(); ++i) table.names.push_back(csv::trim(header[i]));
  std::size_t line_no = 1;
  while (csv::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto ctx = line_context(source, line_no);
    const auto cells = csv::split(line);
    if (cells.size() != header.size()) throw Error(ErrorCode::MalformedRow, ctx + ": wrong field count");
    const Date d = parse_date_at(cells[0], ctx);
    if (!table.dates.empty() && d <= table.dates.back()) {
      throw Error(d == table.dates.back() ? ErrorCode::DuplicateDate : ErrorCode::MalformedRow,
                  ctx + ": dates must be strictly increasing");
    }
    std::vector<std::optional<double>> row;
    row.reserve(cells.size() - 1);
    for (std::size_t i = 1; i < cells.size(); ++i) {
      const std::string cell = csv::trim(cells[i]);
      if (cell.empty()) {
        row.emplace_back();
      } else {
        const double v = csv::parse_double(cell, ctx);
        if (v <= -1.0) throw Error(ErrorCode::MalformedRow, ctx + ": return must exceed -1");
        row.emplace_back(v);
      }
    }
    table.dates.push_back(d);
    table.rows.push_back(std::move(row));
  }
  return table;
}

IndustryTable load_industry_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_industry_csv(in, path.string());
}

void write_industry_csv(std::ostream& out, const IndustryTable& table) {
  out << "date";
  for (const auto& n : table.names) out << ',' << n;
  out << '\n';
  for (std::size_t d = 0; d < table.dates.size(); ++d) {
    out << format_date(table.dates[d]);
    for (const auto& v : table.rows[d]) {
      out << ',';
      if (v) out << csv::format_double(*v);
    }
    out << '\n';
  }
}

SentimentIndexSeries parse_sentiment_csv(std::istream& in, const std::string& provider, const std::string& source) {
  std::string line;
  if (!csv::getline(in, line)) throw Error(ErrorCode::MalformedRow, source + ": missing header row");
  const auto header = csv::split(line);
  const std::size_t c_date = find_column(header, "date", source);
  const std::size_t c_pos = find_column(header, "positive", source);
  const std::size_t c_neg = find_column(header, "negative", source);
  const std::size_t c_neu = find_column(header, "neutral", source);
  const std::size_t c_cnt = find_column(header, "count", source);
  SentimentIndexSeries series;
  series.provider = provider;
  std::size_t line_no = 1;
  while (csv::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto ctx = line_context(source, line_no);
    const auto cells = csv::split(line);
    if (cells.size() != header.size()) throw Error(ErrorCode::MalformedRow, ctx + ": wrong field count");
    SentimentRow row;
    row.date = parse_date_at(cells[c_date], ctx);
    row.positive = csv::parse_double(cells[c_pos], ctx);
    row.negative = csv::parse_double(cells[c_neg], ctx);
    row.neutral = csv::parse_double(cells[c_neu], ctx);
    const double count = csv::parse_double(cells[c_cnt], ctx);
    if (count < 0 || count != std::floor(count)) throw Error(ErrorCode::MalformedRow, ctx + ": count must be a whole number");
    row.news_count = static_cast<std::size_t>(count);
    for (double v : {row.positive, row.negative, row.neutral}) {
      if (v < 0.0 || v > 1.0) throw Error(ErrorCode::MalformedRow, ctx + ": index outside [0, 1]");
    }
    if (std::abs(row.positive + row.negative + row.neutral - 1.0) > 1e-9) {
      throw Error(ErrorCode::MalformedRow, ctx + ": indices must sum to 1");
    }
    if (!series.rows.empty() && row.date <= series.rows.back().date) {
      throw Error(row.date == series.rows.back().date ? ErrorCode::DuplicateDate : ErrorCode::MalformedRow,
                  ctx + ": dates must be strictly increasing");
    }
    series.rows.push_back(row);
  }
  return series;
}

SentimentIndexSeries load_sentiment_csv(const std::filesystem::path& path, const std::string& provider) {
  auto in = open_input(path);
  return parse_sentiment_csv(in, provider, path.string());
}

void write_sentiment_csv(std::ostream& out, const SentimentIndexSeries& series) {
  out << "date,positive,negative,neutral,count\n";
  for (const auto& r : series.rows) {
    out << format_date(r.date) << ',' << csv::format_double(r.positive) << ',' << csv::format_double(r.negative) << ','
        << csv::format_double(r.neutral) << ',' << r.news_count << '\n';
  }
}

namespace {

template <class Observation>
std::vector<std::optional<double>> align_observations(std::span<const Date> calendar, std::span<const Date> dates,
                                                      const Observation& value_at, MissingPolicy policy,
                                                      std::size_t* filled) {
  std::vector<std::optional<double>> out(calendar.size());
  std::size_t j = 0;
  std::optional<double> last;
  std::size_t fills = 0;
  for (std::size_t i = 0; i < calendar.size(); ++i) {
    while (j < dates.size() && dates[j] <= calendar[i]) {
      const std::optional<double> v = value_at(j);
      if (dates[j] == calendar[i]) out[i] = v;
      if (v) last = v;
      ++j;
    }
    if (!out[i] && policy == MissingPolicy::Ffill && last) {
      out[i] = last;
      ++fills;
    }
  }
  if (filled) *filled += fills;
  return out;
}

}  // namespace

std::vector<std::optional<double>> align_to_calendar(std::span<const Date> calendar, const ReturnSeries& series,
                                                     MissingPolicy policy, std::size_t* filled) {
  std::vector<Date> dates;
  dates.reserve(series.values.size());
  for (const auto& p : series.values) dates.push_back(p.date);
  return align_observations(
      calendar, dates, [&](std::size_t j) { return std::optional<double>(series.values[j].value); }, policy, filled);
}

MultiSourceDataset build_dataset(MarketSeries target, std::span<const BranchAssignment> branches,
                                 const std::map<std::string, MarketSeries>& global_series,
                                 const IndustryTable& industry, std::vector<SentimentIndexSeries> sentiment,
                                 const AlignmentPolicy& policy, TieRule tie) {
  MultiSourceDataset ds;
  ds.labels = make_labels(target, tie);
  ds.calendar.reserve(target.size());
  for (const auto& b : target.rows) ds.calendar.push_back(b.date);
  ds.target = std::move(target);

  for (const auto& branch : branches) {
    for (const auto& symbol : branch.symbols) {
      const auto it = global_series.find(symbol);
      if (it == global_series.end()) throw Error(ErrorCode::MissingSource, "no price series for global symbol '" + symbol + "'");
      GlobalSource src;
      src.symbol = symbol;
      src.branch = branch.branch;
      src.kind = branch.return_kind;
      src.values = align_to_calendar(ds.calendar, compute_returns(it->second, branch.return_kind), policy.global,
                                     &ds.report.global_filled);
      ds.report.global_missing += std::count(src.values.begin(), src.values.end(), std::nullopt);
      ds.global.push_back(std::move(src));
    }
  }

  ds.industry_names = industry.names;
  ds.industry.assign(ds.calendar.size(), std::vector<std::optional<double>>(industry.names.size()));
  for (std::size_t c = 0; c < industry.names.size(); ++c) {
    const auto col = align_observations(
        ds.calendar, industry.dates, [&](std::size_t j) { return industry.rows[j][c]; }, policy.industry,
        &ds.report.industry_filled);
    for (std::size_t d = 0; d < col.size(); ++d) {
      ds.industry[d][c] = col[d];
      if (!col[d]) ++ds.report.industry_missing;
    }
  }

  for (auto& s : sentiment) {
    std::unordered_map<long, const SentimentRow*> by_day;
    for (const auto& r : s.rows) {
      if (!by_day.emplace(r.date.time_since_epoch().count(), &r).second) {
        throw Error(ErrorCode::DuplicateDate, s.provider + ": duplicate sentiment date " + format_date(r.date));
      }
    }
    SentimentIndexSeries aligned;
    aligned.provider = s.provider;
    aligned.rows.reserve(ds.calendar.size());
    std::size_t used = 0;
    for (const Date d : ds.calendar) {
      const auto it = by_day.find(d.time_since_epoch().count());
      if (it != by_day.end()) {
        aligned.rows.push_back(*it->second);
        ++used;
      } else {
        SentimentRow row;
        row.date = d;
        aligned.rows.push_back(row);
        ++ds.report.sentiment_default_days;
      }
    }
    ds.report.sentiment_rows_ignored += s.rows.size() - used;
    ds.sentiment.push_back(std::move(aligned));
  }
  return ds;
}

std::array<double, kMarketFeatureCount> market_features(const Bar& bar) {
  return {bar.open / bar.close - 1.0,     bar.high / bar.close - 1.0, bar.low / bar.close - 1.0,
          bar.close / bar.open - 1.0,     std::log1p(bar.volume),     std::log1p(bar.value)};
}

std::vector<std::size_t> SampleMatrix::samples_in(const DayRange& range) const {
  std::vector<std::size_t> out;
  for (std::size_t n = 0; n < day.size(); ++n) {
    if (range.contains(day[n])) out.push_back(n);
  }
  return out;
}

SampleMatrix assemble_features(const MultiSourceDataset& ds, const LagConfig& lags) {
  if (lags.global == 0 || lags.industry == 0 || lags.sentiment == 0 || lags.market == 0) {
    throw Error(ErrorCode::InvalidConfig, "lags must be at least 1");
  }
  const std::size_t days = ds.calendar.size();
  const std::size_t max_lag = std::max({lags.global, lags.industry, lags.sentiment, lags.market});

  SampleMatrix m;
  // Group global sources by branch in canonical branch order.
  std::vector<std::vector<std::size_t>> members(kBranchCount);
  for (std::size_t g = 0; g < ds.global.size(); ++g) members[static_cast<std::size_t>(ds.global[g].branch)].push_back(g);
  for (std::size_t b = 0; b < kBranchCount; ++b) {
    FeatureBlock block;
    block.name = to_string(static_cast<Branch>(b));
    block.lag = lags.global;
    block.width = members[b].size();
    m.branches.push_back(std::move(block));
    m.branch_of_block.push_back(static_cast<Branch>(b));
    std::vector<std::string> syms;
    for (auto g : members[b]) syms.push_back(ds.global[g].symbol);
    m.branch_symbols.push_back(std::move(syms));
  }
  m.industry.name = "industry";
  m.industry.lag = lags.industry;
  m.industry.width = ds.industry_names.size();
  for (const auto& s : ds.sentiment) {
    m.providers.push_back(s.provider);
    FeatureBlock block;
    block.name = s.provider;
    block.lag = lags.sentiment;
    block.width = kSentimentFeatureCount;
    m.sentiment.push_back(std::move(block));
  }
  m.market.name = "market";
  m.market.lag = lags.market;
  m.market.width = kMarketFeatureCount;

  for (std::size_t d = max_lag; d < days; ++d) {
    bool complete = true;
    for (std::size_t g = 0; g < ds.global.size() && complete; ++g) {
      for (std::size_t l = 0; l < lags.global; ++l) {
        if (!ds.global[g].values[d - 1 - l]) {
          complete = false;
          break;
        }
      }
    }
    for (std::size_t l = 0; l < lags.industry && complete; ++l) {
      for (const auto& v : ds.industry[d - 1 - l]) {
        if (!v) {
          complete = false;
          break;
        }
      }
    }
    if (!complete) continue;

    for (std::size_t b = 0; b < kBranchCount; ++b) {
      for (std::size_t l = 0; l < lags.global; ++l) {
        for (auto g : members[b]) m.branches[b].values.push_back(*ds.global[g].values[d - 1 - l]);
      }
    }
    for (std::size_t l = 0; l < lags.industry; ++l) {
      for (const auto& v : ds.industry[d - 1 - l]) m.industry.values.push_back(*v);
    }
    for (std::size_t p = 0; p < ds.sentiment.size(); ++p) {
      for (std::size_t l = 0; l < lags.sentiment; ++l) {
        const auto& r = ds.sentiment[p].rows[d - 1 - l];
        m.sentiment[p].values.insert(m.sentiment[p].values.end(),
                                     {r.positive, r.negative, r.neutral, std::log1p(static_cast<double>(r.news_count))});
      }
    }
    for (std::size_t l = 0; l < lags.market; ++l) {
      const auto f = market_features(ds.target.rows[d - 1 - l]);
      m.market.values.insert(m.market.values.end(), f.begin(), f.end());
    }

    const auto& label = ds.labels[d - 1];
    m.day.push_back(d);
    m.label_date.push_back(ds.calendar[d]);
    m.latest_feature_date.push_back(ds.calendar[d - 1]);
    m.earliest_feature_date.push_back(ds.calendar[d - max_lag]);
    m.labels.push_back(label.direction);
    m.raw_returns.push_back(label.raw_return);
  }
  if (m.day.empty()) throw Error(ErrorCode::EmptyResult, "no day has complete lagged features");
  return m;
}

}  // namespace tdse::data
