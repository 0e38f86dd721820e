#include "tdse/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "tdse/csv.hpp"
#include "tdse/error.hpp"
#include "tdse/rng.hpp"

namespace tdse::synth {

namespace fs = std::filesystem;

namespace {

std::vector<Date> weekdays(Date start, int months) {
  std::vector<Date> out;
  const int first = month_index(start);
  for (Date d = start; month_index(d) < first + months; d += std::chrono::days{1}) {
    const std::chrono::weekday wd{d};
    if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) out.push_back(d);
  }
  return out;
}

data::Bar bar_from_return(Date date, double prev_close, double r, Rng& rng) {
  data::Bar b;
  b.date = date;
  b.close = prev_close * (1.0 + r);
  b.open = prev_close * (1.0 + 0.002 * rng.normal());
  b.high = std::max(b.open, b.close) * (1.0 + 0.002 * std::fabs(rng.normal()));
  b.low = std::min(b.open, b.close) * (1.0 - 0.002 * std::fabs(rng.normal()));
  b.volume = std::round(1e6 * std::exp(0.3 * rng.normal()));
  b.value = std::round(b.volume * b.close);
  return b;
}

std::ofstream open(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

}  // namespace

SyntheticData generate(const SyntheticConfig& c) {
  if (c.industry_groups < 1 || c.industries < c.industry_groups || c.providers < 1 || c.symbols_per_branch < 1 ||
      c.rotation_months < 1 || c.docs_per_day < 1) {
    throw Error(ErrorCode::InvalidConfig, "synthetic: invalid sizes");
  }
  if (c.sentiment_strength < 0.0 || c.sentiment_strength > 1.0) {
    throw Error(ErrorCode::InvalidConfig, "synthetic: sentiment_strength must lie in [0, 1]");
  }
  const auto calendar = weekdays(parse_date(c.start), c.months);
  const std::size_t T = calendar.size();
  Rng rng(derive_seed(c.seed, {0}));
  SyntheticData d;

  d.direction.assign(T, 0);
  for (std::size_t t = 1; t < T; ++t) d.direction[t] = rng.bernoulli(0.5) ? 1 : -1;
  const auto next_z = [&](std::size_t t) { return t + 1 < T ? static_cast<double>(d.direction[t + 1]) : 0.0; };

  d.target.symbol = "TARGET";
  {
    Rng r(derive_seed(c.seed, {1}));
    double close = 100.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double ret = t == 0 ? 0.0 : d.direction[t] * r.uniform(0.002, 0.012);
      d.target.rows.push_back(bar_from_return(calendar[t], close, ret, r));
      close = d.target.rows.back().close;
    }
  }

  const std::array<data::Branch, data::kBranchCount> branches = {data::Branch::Asia, data::Branch::Europe,
                                                                 data::Branch::Americas, data::Branch::Target,
                                                                 data::Branch::Pre};
  for (std::size_t b = 0; b < branches.size(); ++b) {
    const bool signal = branches[b] == data::Branch::Asia || branches[b] == data::Branch::Pre;
    data::BranchAssignment a;
    a.branch = branches[b];
    a.return_kind = data::ReturnKind::CloseToClose;
    Rng r(derive_seed(c.seed, {2, b}));
    std::vector<double> region(T);
    for (auto& v : region) v = 0.5 * r.normal();
    for (std::size_t s = 0; s < c.symbols_per_branch; ++s) {
      data::MarketSeries m;
      m.symbol = std::string(data::to_string(branches[b])).substr(0, 2) + "_" + std::to_string(s);
      double close = 100.0;
      for (std::size_t t = 0; t < T; ++t) {
        const double drive = signal ? c.global_strength * next_z(t) : c.global_strength * (r.bernoulli(0.5) ? 1 : -1);
        const double ret = t == 0 ? 0.0 : 0.01 * (drive + region[t] + 0.5 * r.normal());
        data::Bar bar = bar_from_return(calendar[t], close, ret, r);
        close = bar.close;
        if (t > 0 && r.bernoulli(0.02)) continue;
        m.rows.push_back(bar);
      }
      a.symbols.push_back(m.symbol);
      d.global.emplace(m.symbol, std::move(m));
    }
    d.branches.push_back(std::move(a));
  }

  {
    Rng r(derive_seed(c.seed, {3}));
    for (std::size_t i = 0; i < c.industries; ++i) d.industry.names.push_back("IND" + std::to_string(100 + i));
    d.industry.dates = calendar;
    const int first_month = month_index(calendar.front());
    for (std::size_t t = 0; t < T; ++t) {
      const auto active =
          static_cast<std::size_t>((month_index(calendar[t]) - first_month) / c.rotation_months) % c.industry_groups;
      std::vector<double> factor(c.industry_groups);
      for (std::size_t g = 0; g < c.industry_groups; ++g) {
        const double sign = g == active ? next_z(t) : (r.bernoulli(0.5) ? 1.0 : -1.0);
        factor[g] = c.industry_strength * sign + r.normal();
      }
      std::vector<std::optional<double>> row(c.industries);
      for (std::size_t i = 0; i < c.industries; ++i) {
        row[i] = 0.01 * (factor[i % c.industry_groups] + 0.3 * r.normal());
      }
      d.industry.rows.push_back(std::move(row));
    }
  }

  for (int k = 0; k < 10; ++k) {
    d.positive_terms.push_back("gain" + std::to_string(k));
    d.negative_terms.push_back("loss" + std::to_string(k));
  }
  d.stopwords = {"the", "of", "and"};
  for (std::size_t p = 0; p < c.providers; ++p) {
    d.providers.push_back("provider" + std::to_string(p));
    Rng r(derive_seed(c.seed, {4, p}));
    const double strength = c.sentiment_strength * (1.0 - 0.1 * static_cast<double>(p));
    std::vector<sentiment::NewsItem> items;
    for (std::size_t t = 0; t < T; ++t) {
      const double p_pos = 0.5 + 0.5 * strength * next_z(t);
      for (std::size_t k = 0; k < c.docs_per_day; ++k) {
        const bool positive = r.bernoulli(p_pos);
        sentiment::NewsItem doc;
        doc.date = calendar[t];
        const auto& terms = positive ? d.positive_terms : d.negative_terms;
        doc.tokens.push_back(terms[r.index(terms.size())]);
        doc.tokens.push_back(terms[r.index(terms.size())]);
        for (int w = 0; w < 6; ++w) doc.tokens.push_back("word" + std::to_string(r.index(40)));
        doc.tokens.push_back(d.stopwords[r.index(d.stopwords.size())]);
        doc.tokens.push_back(std::to_string(r.index(100)));
        items.push_back(std::move(doc));
      }
    }
    d.news.push_back(std::move(items));
  }
  return d;
}

void write(const SyntheticData& d, const fs::path& dir, std::uint64_t seed) {
  {
    auto out = open(dir / "target.csv");
    data::write_ohlcv_csv(out, d.target);
  }
  {
    auto out = open(dir / "branches.cfg");
    data::write_branch_config(out, d.branches);
  }
  {
    auto out = open(dir / "industry.csv");
    data::write_industry_csv(out, d.industry);
  }
  for (const auto& [symbol, series] : d.global) {
    auto out = open(dir / "global" / (symbol + ".csv"));
    data::write_ohlcv_csv(out, series);
  }
  for (std::size_t p = 0; p < d.providers.size(); ++p) {
    auto out = open(dir / "news" / (d.providers[p] + ".tsv"));
    for (const auto& item : d.news[p]) {
      out << format_date(item.date) << '\t';
      for (std::size_t k = 0; k < item.tokens.size(); ++k) out << (k ? " " : "") << item.tokens[k];
      out << '\n';
    }
  }
  const auto list = [&](const char* name, const std::vector<std::string>& terms) {
    auto out = open(dir / "lexicon" / name);
    for (const auto& t : terms) out << t << '\n';
  };
  list("positive.txt", d.positive_terms);
  list("negative.txt", d.negative_terms);
  list("stopwords.txt", d.stopwords);

  auto cfg = open(dir / "tdse.cfg");
  cfg << "# synthetic dataset\n"
      << "seed = " << seed << "\n"
      << "data.dir = .\n"
      << "data.providers = ";
  for (std::size_t p = 0; p < d.providers.size(); ++p) cfg << (p ? "," : "") << d.providers[p];
  cfg << "\n";
}

}  // namespace tdse::synth
