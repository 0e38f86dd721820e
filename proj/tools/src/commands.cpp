#include "tdse_cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "tdse/csv.hpp"
#include "tdse/ensemble.hpp"
#include "tdse/error.hpp"
#include "tdse/evaluation.hpp"
#include "tdse/parallel.hpp"
#include "tdse/sentiment.hpp"

namespace tdse::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "data.dir", "data.target", "data.branches", "data.global_dir", "data.industry", "data.providers",
      "data.sentiment_dir", "data.news_dir", "data.lexicon_positive", "data.lexicon_negative", "data.stopwords",
      "data.snapshot", "data.global_policy", "data.industry_policy", "data.tie",
      "windows.count", "windows.train_months", "windows.test_months", "windows.extractor_fraction",
      "lags.global", "lags.industry", "lags.sentiment", "lags.market",
      "seed", "workers", "out",
      "mbcnn.kernel", "mbcnn.filters", "mbcnn.dense_width", "mbcnn.epochs", "mbcnn.learning_rate",
      "mbcnn.batch_size", "mbcnn.bn_momentum", "mbcnn.l2",
      "sc.kernel", "sc.filters", "sc.dense_width", "sc.epochs", "sc.learning_rate", "sc.batch_size",
      "sc.sigma_scale", "sc.cluster_count",
      "rnn.hidden1", "rnn.hidden2", "rnn.learning_rate", "rnn.epochs", "rnn.weights", "rnn.batch_size",
      "meta.lr_C", "meta.knn_k", "meta.rbf_C", "meta.rbf_gamma", "meta.poly_C", "meta.poly_degree",
      "meta.rf_trees", "meta.et_trees", "meta.ann_widths",
      "ga.population", "ga.generations", "ga.stall", "ga.selection", "ga.crossover", "ga.mutation",
      "stage1.population", "stage1.generations", "stage1.stall",
      "backtest.random_seed", "backtest.sharpe",
  };
  return keys;
}

namespace {

fs::path resolve(const fs::path& base, const std::string& value) {
  const fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingSource, "missing " + what + " file '" + path.string() + "'");
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  auto out = open_out(path);
  body(out);
}

}  // namespace

RunConfig make_run_config(Config c, const fs::path& base, const Overrides& ov) {
  c.apply_env(known_keys());
  c.check_known(known_keys());
  if (ov.seed) c.set("seed", std::to_string(*ov.seed));
  if (ov.workers) c.set("workers", std::to_string(*ov.workers));
  if (ov.out) c.set("out", ov.out->string());

  RunConfig rc;
  rc.raw = c;
  rc.data_dir = resolve(base, c.text("data.dir", "."));
  rc.target = resolve(rc.data_dir, c.text("data.target", "target.csv"));
  rc.branches = resolve(rc.data_dir, c.text("data.branches", "branches.cfg"));
  rc.global_dir = resolve(rc.data_dir, c.text("data.global_dir", "global"));
  rc.industry = resolve(rc.data_dir, c.text("data.industry", "industry.csv"));
  rc.providers = c.list("data.providers");
  if (c.has("data.sentiment_dir")) rc.sentiment_dir = resolve(rc.data_dir, c.text("data.sentiment_dir", ""));
  rc.news_dir = resolve(rc.data_dir, c.text("data.news_dir", "news"));
  rc.lexicon_positive = resolve(rc.data_dir, c.text("data.lexicon_positive", "lexicon/positive.txt"));
  rc.lexicon_negative = resolve(rc.data_dir, c.text("data.lexicon_negative", "lexicon/negative.txt"));
  rc.stopwords = resolve(rc.data_dir, c.text("data.stopwords", "lexicon/stopwords.txt"));
  rc.policy.global = data::parse_missing_policy(c.text("data.global_policy", "ffill"));
  rc.policy.industry = data::parse_missing_policy(c.text("data.industry_policy", "ffill"));
  const auto tie = c.text("data.tie", "down");
  if (tie != "down" && tie != "up") throw Error(ErrorCode::InvalidConfig, "data.tie must be 'down' or 'up'");
  rc.tie = tie == "up" ? data::TieRule::ZeroIsUp : data::TieRule::ZeroIsDown;

  rc.windows.count = c.size("windows.count", rc.windows.count);
  rc.windows.train_months = static_cast<int>(c.size("windows.train_months", 11));
  rc.windows.test_months = static_cast<int>(c.size("windows.test_months", 3));
  rc.windows.extractor_fraction = c.real("windows.extractor_fraction", rc.windows.extractor_fraction);
  rc.lags.global = c.size("lags.global", rc.lags.global);
  rc.lags.industry = c.size("lags.industry", rc.lags.industry);
  rc.lags.sentiment = c.size("lags.sentiment", rc.lags.sentiment);
  rc.lags.market = c.size("lags.market", rc.lags.market);

  if (!c.has("seed")) throw Error(ErrorCode::InvalidConfig, "a seed is required (config key 'seed' or --seed)");
  rc.seed = c.u64("seed", 0);
  rc.workers = std::max<std::size_t>(1, c.size("workers", 1));
  rc.out = c.text("out", "out");
  rc.snapshot = c.has("data.snapshot") ? resolve(base, c.text("data.snapshot", "")) : rc.out / "snapshot";

  auto& m = rc.stage1.mbcnn;
  m.kernel = c.size("mbcnn.kernel", m.kernel);
  m.filters = c.size("mbcnn.filters", m.filters);
  m.dense_width = c.size("mbcnn.dense_width", m.dense_width);
  m.epochs = c.size("mbcnn.epochs", m.epochs);
  m.learning_rate = c.real("mbcnn.learning_rate", m.learning_rate);
  m.batch_size = c.size("mbcnn.batch_size", m.batch_size);
  m.bn_momentum = c.real("mbcnn.bn_momentum", m.bn_momentum);
  m.l2 = c.real("mbcnn.l2", m.l2);
  auto& s = rc.stage1.sc;
  s.kernel = c.size("sc.kernel", s.kernel);
  s.filters = c.size("sc.filters", s.filters);
  s.dense_width = c.size("sc.dense_width", s.dense_width);
  s.epochs = c.size("sc.epochs", s.epochs);
  s.learning_rate = c.real("sc.learning_rate", s.learning_rate);
  s.batch_size = c.size("sc.batch_size", s.batch_size);
  s.sigma_scale = c.real("sc.sigma_scale", s.sigma_scale);
  s.cluster_count = c.size("sc.cluster_count", s.cluster_count);
  extract::ProviderHyper ph;
  ph.hidden1 = c.size("rnn.hidden1", ph.hidden1);
  ph.hidden2 = c.size("rnn.hidden2", ph.hidden2);
  ph.learning_rate = c.real("rnn.learning_rate", ph.learning_rate);
  ph.epochs = c.size("rnn.epochs", ph.epochs);
  const auto weights = c.list("rnn.weights");
  if (!weights.empty() && weights.size() != rc.providers.size()) {
    throw Error(ErrorCode::InvalidConfig, "rnn.weights needs one entry per provider");
  }
  for (std::size_t i = 0; i < rc.providers.size(); ++i) {
    ph.weight = weights.empty() ? 1.0 : csv::parse_double(weights[i], "rnn.weights");
    rc.stage1.rnn.providers.push_back(ph);
  }
  rc.stage1.rnn.batch_size = c.size("rnn.batch_size", rc.stage1.rnn.batch_size);

  auto& h = rc.stage2;
  h.lr_C = c.real("meta.lr_C", h.lr_C);
  h.knn_k = c.size("meta.knn_k", h.knn_k);
  h.rbf_C = c.real("meta.rbf_C", h.rbf_C);
  h.rbf_gamma = c.real("meta.rbf_gamma", h.rbf_gamma);
  h.poly_C = c.real("meta.poly_C", h.poly_C);
  h.poly_degree = static_cast<int>(c.size("meta.poly_degree", static_cast<std::size_t>(h.poly_degree)));
  h.rf_trees = c.size("meta.rf_trees", h.rf_trees);
  h.et_trees = c.size("meta.et_trees", h.et_trees);
  if (c.has("meta.ann_widths")) {
    const auto w = c.list("meta.ann_widths");
    if (w.size() != 3) throw Error(ErrorCode::InvalidConfig, "meta.ann_widths needs three widths");
    for (std::size_t i = 0; i < 3; ++i) {
      h.ann_widths[i] = static_cast<std::size_t>(csv::parse_double(w[i], "meta.ann_widths"));
    }
  }

  auto& g = rc.ga_stage2;
  g.population = c.size("ga.population", g.population);
  g.generations = c.size("ga.generations", g.generations);
  g.stall = c.size("ga.stall", g.stall);
  g.selection_rate = c.real("ga.selection", g.selection_rate);
  g.crossover_rate = c.real("ga.crossover", g.crossover_rate);
  g.mutation_rate = c.real("ga.mutation", g.mutation_rate);
  g.workers = rc.workers;
  ga::validate(g);
  rc.ga_stage1 = g;
  rc.ga_stage1.population = c.size("stage1.population", g.population);
  rc.ga_stage1.generations = c.size("stage1.generations", g.generations);
  rc.ga_stage1.stall = c.size("stage1.stall", g.stall);
  ga::validate(rc.ga_stage1);

  rc.random_seed = c.u64("backtest.random_seed", rc.seed);
  const auto sharpe = c.text("backtest.sharpe", "monthly");
  if (sharpe != "monthly" && sharpe != "daily") {
    throw Error(ErrorCode::InvalidConfig, "backtest.sharpe must be 'monthly' or 'daily'");
  }
  rc.sharpe = sharpe == "daily" ? backtest::SharpeBasis::Daily : backtest::SharpeBasis::Monthly;
  return rc;
}

RunConfig load_run_config(const std::optional<fs::path>& path, const Overrides& overrides) {
  if (!path) return make_run_config(Config{}, fs::current_path(), overrides);
  const fs::path base = path->has_parent_path() ? path->parent_path() : fs::path(".");
  return make_run_config(Config::load(*path), base, overrides);
}

// ------------------------------------------------------------------ ingest

namespace {

struct RawSources {
  data::MarketSeries target;
  std::vector<data::BranchAssignment> branches;
  std::map<std::string, data::MarketSeries> global;
  data::IndustryTable industry;
};

RawSources load_raw(const fs::path& target, const fs::path& branches, const fs::path& global_dir,
                    const fs::path& industry) {
  RawSources r;
  require_file(target, "target market");
  require_file(branches, "branch config");
  require_file(industry, "industry");
  r.target = data::load_ohlcv_csv(target);
  r.branches = data::load_branch_config(branches);
  for (const auto& b : r.branches) {
    for (const auto& symbol : b.symbols) {
      const auto path = global_dir / (symbol + ".csv");
      require_file(path, "global index");
      auto series = data::load_ohlcv_csv(path);
      series.symbol = symbol;
      r.global.emplace(symbol, std::move(series));
    }
  }
  r.industry = data::load_industry_csv(industry);
  return r;
}

std::size_t lookahead_violations(const data::SampleMatrix& sm) {
  std::size_t bad = 0;
  for (std::size_t i = 0; i < sm.size(); ++i) bad += sm.latest_feature_date[i] >= sm.label_date[i] ? 1 : 0;
  return bad;
}

void require_providers(const RunConfig& rc) {
  if (rc.providers.empty()) throw Error(ErrorCode::InvalidConfig, "data.providers lists no news provider");
}

}  // namespace

data::MultiSourceDataset cmd_ingest(const RunConfig& rc) {
  require_providers(rc);
  RawSources raw = load_raw(rc.target, rc.branches, rc.global_dir, rc.industry);

  std::vector<data::SentimentIndexSeries> sentiment;
  if (!rc.sentiment_dir.empty()) {
    for (const auto& p : rc.providers) {
      const auto path = rc.sentiment_dir / ("sentiment_" + p + ".csv");
      require_file(path, "sentiment");
      sentiment.push_back(data::load_sentiment_csv(path, p));
    }
  } else {
    require_file(rc.lexicon_positive, "positive lexicon");
    require_file(rc.lexicon_negative, "negative lexicon");
    const auto lexicon = sentiment::load_lexicon(rc.lexicon_positive, rc.lexicon_negative);
    sentiment::IndexOptions options;
    if (fs::exists(rc.stopwords)) options.stopwords = sentiment::load_term_list(rc.stopwords);
    std::vector<Date> calendar;
    for (const auto& b : raw.target.rows) calendar.push_back(b.date);
    std::sort(calendar.begin(), calendar.end());
    // Document frequencies come from the first window's extractor-train span.
    const auto windows = data::build_windows(calendar, rc.windows);
    options.idf_from = calendar[windows.front().extractor_train.begin];
    options.idf_to = calendar[windows.front().extractor_train.end - 1];
    for (const auto& p : rc.providers) {
      const auto path = rc.news_dir / (p + ".tsv");
      require_file(path, "news");
      const auto news = sentiment::load_news(path);
      sentiment.push_back(sentiment::build_index(p, news, calendar, lexicon, options));
    }
  }

  auto dataset = data::build_dataset(raw.target, raw.branches, raw.global, raw.industry, sentiment, rc.policy, rc.tie);
  const auto samples = data::assemble_features(dataset, rc.lags);

  const fs::path dir = rc.snapshot;
  write_file(dir / "target.csv", [&](std::ostream& o) { data::write_ohlcv_csv(o, raw.target); });
  write_file(dir / "branches.cfg", [&](std::ostream& o) { data::write_branch_config(o, raw.branches); });
  write_file(dir / "industry.csv", [&](std::ostream& o) { data::write_industry_csv(o, raw.industry); });
  for (const auto& [symbol, series] : raw.global) {
    write_file(dir / "global" / (symbol + ".csv"), [&](std::ostream& o) { data::write_ohlcv_csv(o, series); });
  }
  for (const auto& s : dataset.sentiment) {
    write_file(dir / ("sentiment_" + s.provider + ".csv"), [&](std::ostream& o) { data::write_sentiment_csv(o, s); });
  }
  const auto& rep = dataset.report;
  json j;
  j["calendar_days"] = dataset.calendar.size();
  j["first_day"] = format_date(dataset.calendar.front());
  j["last_day"] = format_date(dataset.calendar.back());
  j["labels"] = dataset.labels.size();
  j["samples"] = samples.size();
  j["global_filled"] = rep.global_filled;
  j["global_missing"] = rep.global_missing;
  j["industry_filled"] = rep.industry_filled;
  j["industry_missing"] = rep.industry_missing;
  j["sentiment_default_days"] = rep.sentiment_default_days;
  j["sentiment_rows_ignored"] = rep.sentiment_rows_ignored;
  j["violations"] = lookahead_violations(samples);
  write_file(dir / "alignment.json", [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  return dataset;
}

data::MultiSourceDataset load_snapshot(const RunConfig& rc) {
  require_providers(rc);
  const fs::path dir = rc.snapshot;
  if (!fs::exists(dir / "alignment.json")) {
    throw Error(ErrorCode::MissingSource, "no snapshot in '" + dir.string() + "'; run ingest first");
  }
  RawSources raw = load_raw(dir / "target.csv", dir / "branches.cfg", dir / "global", dir / "industry.csv");
  std::vector<data::SentimentIndexSeries> sentiment;
  for (const auto& p : rc.providers) {
    const auto path = dir / ("sentiment_" + p + ".csv");
    require_file(path, "sentiment");
    sentiment.push_back(data::load_sentiment_csv(path, p));
  }
  return data::build_dataset(raw.target, raw.branches, raw.global, raw.industry, sentiment, rc.policy, rc.tie);
}

// ------------------------------------------------------------ train / run

namespace {

json metric_json(const eval::MetricReport& r) {
  json j;
  j["accuracy"] = r.accuracy;
  const auto put = [&](const char* k, const std::optional<double>& v) {
    if (v) j[k] = *v;
    else j[k] = nullptr;
  };
  put("precision", r.precision);
  put("recall", r.recall);
  put("f_measure", r.f_measure);
  put("auc", r.auc);
  return j;
}

void write_outputs(const RunConfig& rc, const pipeline::Prepared& p, RunSummary& s) {
  std::vector<eval::WindowReport> reports;
  std::vector<ensemble::ScheduleEntry> schedule;
  for (const auto& o : s.outcomes) {
    reports.push_back(o.report);
    schedule.push_back(o.schedule);
  }
  write_file(rc.out / "report.csv", [&](std::ostream& o) { eval::write_report_csv(o, reports); });
  write_file(rc.out / "report.json", [&](std::ostream& o) { eval::write_report_json(o, reports); });
  write_file(rc.out / "schedule.csv", [&](std::ostream& o) { ensemble::write_schedule_csv(o, schedule); });
  write_file(rc.out / "predictions.csv", [&](std::ostream& o) {
    o << "window,date,actual,predicted,score,scored\n";
    for (std::size_t w = 0; w < s.features.size(); ++w) {
      const auto& f = s.features[w];
      const auto& pr = s.outcomes[w].predictions;
      for (std::size_t i = 0; i < f.test_rows.size(); ++i) {
        o << f.window << ',' << format_date(p.samples.label_date[f.test_rows[i]]) << ',' << f.test_y[i] << ','
          << pr.labels[i] << ',' << csv::format_double(pr.scores[i]) << ',' << (f.scored[i] ? 1 : 0) << '\n';
      }
    }
  });
  for (const auto& f : s.features) {
    write_file(rc.out / "features" / ("window_" + std::to_string(f.window) + ".csv"), [&](std::ostream& o) {
      o << "date,x1,x2,x3,x4,x5,x6,label\n";
      const auto dump = [&](std::span<const std::size_t> rows, const meta::Rows& X, std::span<const int> y) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
          o << format_date(p.samples.label_date[rows[i]]);
          for (double v : X[i]) o << ',' << csv::format_double(v);
          o << ',' << y[i] << '\n';
        }
      };
      dump(f.meta_rows, f.meta_X, f.meta_y);
      dump(f.test_rows, f.test_X, f.test_y);
    });
  }
  write_file(rc.out / "extractors.csv", [&](std::ostream& o) {
    o << "window,val_mbcnn,val_sc_mbcnn,val_rnn_er,clusters\n";
    for (const auto& f : s.features) {
      o << f.window << ',' << csv::format_double(f.validation_accuracy[0]) << ','
        << csv::format_double(f.validation_accuracy[1]) << ',' << csv::format_double(f.validation_accuracy[2])
        << ',' << f.clusters << '\n';
    }
  });
  s.mean_accuracy = pipeline::mean_accuracy(s.outcomes);
  s.random_accuracy = pipeline::random_baseline_accuracy(s.features, rc.random_seed);
  json j;
  j["seed"] = rc.seed;
  j["windows"] = s.outcomes.size();
  j["mean_accuracy"] = s.mean_accuracy;
  j["random_accuracy"] = s.random_accuracy;
  j["mean"] = metric_json(eval::mean_report(reports).metrics);
  write_file(rc.out / "summary.json", [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

}  // namespace

RunSummary cmd_train(const RunConfig& rc) {
  const auto dataset = load_snapshot(rc);
  const auto prepared = pipeline::prepare(dataset, rc.lags, rc.windows);
  RunSummary s;
  const std::vector<pipeline::Stage1Hyper> hyper = {rc.stage1};
  s.features = pipeline::all_features(prepared, hyper, rc.seed, rc.workers, rc.out / "checkpoints");
  s.outcomes = pipeline::run_stage2(s.features, rc.stage2, rc.seed, rc.workers);
  write_outputs(rc, prepared, s);
  return s;
}

namespace {

json genes_json(const ga::Schema& schema, std::span<const double> genes) {
  json j = json::object();
  for (std::size_t k = 0; k < schema.size(); ++k) j[schema[k].name] = genes[k];
  return j;
}

ga::Schema schema_of(pipeline::ExtractorKind kind, std::size_t providers) {
  switch (kind) {
    case pipeline::ExtractorKind::Global: return ga::mbcnn_schema();
    case pipeline::ExtractorKind::Industry: return ga::sc_mbcnn_schema();
    case pipeline::ExtractorKind::Media: return ga::rnn_er_schema(providers);
  }
  return {};
}

}  // namespace

RunSummary cmd_optimize(const RunConfig& rc) {
  const auto dataset = load_snapshot(rc);
  const auto prepared = pipeline::prepare(dataset, rc.lags, rc.windows);
  const std::size_t W = prepared.windows.size();
  const std::size_t providers = prepared.providers.size();

  // Stage 1: one GA per window and extractor, run concurrently.
  std::vector<ga::GaResult> runs(W * pipeline::kExtractors.size());
  ga::GaConfig inner = rc.ga_stage1;
  inner.workers = 1;
  parallel_for(runs.size(), rc.workers, [&](std::size_t job) {
    const std::size_t w = job / pipeline::kExtractors.size() + 1;
    const auto kind = pipeline::kExtractors[job % pipeline::kExtractors.size()];
    runs[job] = pipeline::optimize_stage1(prepared, w, kind, inner, rc.seed);
  });
  std::vector<pipeline::Stage1Hyper> hyper(W, rc.stage1);
  json best;
  best["stage1"] = json::array();
  for (std::size_t w = 0; w < W; ++w) {
    json entry;
    entry["window"] = w + 1;
    for (std::size_t k = 0; k < pipeline::kExtractors.size(); ++k) {
      const auto kind = pipeline::kExtractors[k];
      const auto& run = runs[w * pipeline::kExtractors.size() + k];
      pipeline::apply_stage1(hyper[w], kind, run.best.genes, providers);
      const auto schema = schema_of(kind, providers);
      write_file(rc.out / "ga" / ("stage1_" + std::string(pipeline::to_string(kind)) + "_window" +
                                  std::to_string(w + 1) + ".jsonl"),
                 [&](std::ostream& o) { ga::write_run_log(o, schema, run); });
      entry[pipeline::to_string(kind)] = {{"fitness", run.best.fitness},
                                          {"genes", genes_json(schema, run.best.genes)}};
    }
    best["stage1"].push_back(entry);
  }

  RunSummary s;
  s.features = pipeline::all_features(prepared, hyper, rc.seed, rc.workers, rc.out / "checkpoints");

  // Stage 2 over the fitness windows; the last window is held out.
  const auto stage2 = pipeline::optimize_stage2(s.features, rc.ga_stage2, rc.seed);
  const auto schema = ga::stage2_schema();
  write_file(rc.out / "ga" / "stage2.jsonl", [&](std::ostream& o) { ga::write_run_log(o, schema, stage2); });
  best["stage2"] = {{"fitness", stage2.best.fitness}, {"genes", genes_json(schema, stage2.best.genes)}};
  write_file(rc.out / "best_genome.json", [&](std::ostream& o) { o << best.dump(2) << '\n'; });

  s.outcomes = pipeline::run_stage2(s.features, ga::to_meta_hyper(stage2.best.genes), rc.seed, rc.workers);
  write_outputs(rc, prepared, s);
  const auto& last = s.outcomes.back();
  json holdout;
  holdout["window"] = last.report.window;
  holdout["chosen"] = meta::to_string(last.schedule.chosen);
  holdout["fitness_windows"] = pipeline::fitness_window_count(W);
  holdout["fitness"] = stage2.best.fitness;
  holdout["metrics"] = metric_json(last.report.metrics);
  write_file(rc.out / "holdout.json", [&](std::ostream& o) { o << holdout.dump(2) << '\n'; });
  return s;
}

// ----------------------------------------------------------------- evaluate

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name, const std::string& source) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::MalformedRow, source + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
  bool has(const std::string& name) const { return std::find(header.begin(), header.end(), name) != header.end(); }
};

CsvTable read_table(const fs::path& path) {
  require_file(path, "input");
  std::ifstream in(path);
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  while (csv::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    auto cells = csv::split(line);
    for (auto& c : cells) c = csv::trim(c);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw Error(ErrorCode::MalformedRow, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                               std::to_string(t.header.size()) + " cells");
    }
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw Error(ErrorCode::MalformedRow, path.string() + ": empty file");
  return t;
}

int parse_signal(const std::string& v, const std::string& ctx) {
  if (v == "1" || v == "Up" || v == "up") return 1;
  if (v == "0" || v == "Down" || v == "down") return 0;
  throw Error(ErrorCode::MalformedRow, ctx + ": bad signal '" + v + "'");
}

std::vector<eval::WindowReport> window_reports(const fs::path& path) {
  const auto t = read_table(path);
  const auto cw = t.column("window", path.string());
  const auto ca = t.column("actual", path.string());
  const auto cp = t.column("predicted", path.string());
  const auto cs = t.column("score", path.string());
  std::map<std::size_t, std::tuple<std::vector<int>, std::vector<int>, std::vector<double>>> by_window;
  for (const auto& r : t.rows) {
    auto& [pred, actual, score] = by_window[static_cast<std::size_t>(csv::parse_double(r[cw], path.string()))];
    pred.push_back(parse_signal(r[cp], path.string()));
    actual.push_back(parse_signal(r[ca], path.string()));
    score.push_back(csv::parse_double(r[cs], path.string()));
  }
  std::vector<eval::WindowReport> out;
  for (const auto& [w, v] : by_window) {
    const auto& [pred, actual, score] = v;
    out.push_back({w, pred.size(), eval::evaluate(pred, score, actual)});
  }
  return out;
}

}  // namespace

void cmd_evaluate(const RunConfig& rc, const fs::path& predictions, const std::optional<fs::path>& against) {
  const auto reports = window_reports(predictions);
  write_file(rc.out / "evaluation.csv", [&](std::ostream& o) { eval::write_report_csv(o, reports); });
  write_file(rc.out / "evaluation.json", [&](std::ostream& o) { eval::write_report_json(o, reports); });
  if (!against) return;
  const auto other = window_reports(*against);
  std::vector<double> a, b;
  for (const auto& r : reports) {
    const auto it = std::find_if(other.begin(), other.end(), [&](const auto& x) { return x.window == r.window; });
    if (it == other.end()) continue;
    a.push_back(r.metrics.accuracy);
    b.push_back(it->metrics.accuracy);
  }
  const auto t = eval::paired_t_test(a, b);
  json j;
  j["pairs"] = a.size();
  j["t"] = t.t;
  j["df"] = t.df;
  j["p"] = t.p;
  write_file(rc.out / "ttest.json", [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

// ----------------------------------------------------------------- backtest

std::vector<backtest::EconReport> cmd_backtest(const RunConfig& rc, const fs::path& signals) {
  const auto target_path = rc.snapshot / "target.csv";
  require_file(target_path, "snapshot target");
  const auto target = data::load_ohlcv_csv(target_path);

  const auto t = read_table(signals);
  const auto cd = t.column("date", signals.string());
  const std::size_t cv = t.has("predicted") ? t.column("predicted", signals.string())
                                            : t.column("signal", signals.string());
  const bool filter = t.has("scored");
  const std::size_t cs = filter ? t.column("scored", signals.string()) : 0;
  std::map<Date, int> by_date;
  for (const auto& r : t.rows) {
    if (filter && r[cs] != "1") continue;
    by_date[parse_date(r[cd])] = parse_signal(r[cv], signals.string());
  }
  if (by_date.empty()) throw Error(ErrorCode::EmptyResult, signals.string() + ": no signals");

  const auto& rows = target.rows;
  const auto find = [&](Date d) {
    const auto it = std::lower_bound(rows.begin(), rows.end(), d, [](const data::Bar& b, Date x) { return b.date < x; });
    if (it == rows.end() || it->date != d) {
      throw Error(ErrorCode::MalformedRow, "signal date " + format_date(d) + " is not a trading day");
    }
    return static_cast<std::size_t>(it - rows.begin());
  };
  const std::size_t first = find(by_date.begin()->first);
  const std::size_t last = find(by_date.rbegin()->first);
  if (first == 0) throw Error(ErrorCode::SeriesTooShort, "first signal day has no previous close");
  std::vector<Date> dates;
  std::vector<double> closes;
  std::vector<int> sig;
  for (std::size_t i = first - 1; i <= last; ++i) {
    dates.push_back(rows[i].date);
    closes.push_back(rows[i].close);
    if (i >= first) {
      const auto it = by_date.find(rows[i].date);
      sig.push_back(it == by_date.end() ? 0 : it->second);
    }
  }

  const std::vector<std::pair<std::string, backtest::EquityCurve>> curves = {
      {"TDSE", backtest::run_signal_strategy(dates, closes, sig)},
      {"BuyHold", backtest::buy_and_hold(dates, closes)},
      {"Random", backtest::random_strategy(dates, closes, rc.random_seed)},
  };
  std::vector<backtest::EconReport> reports;
  for (const auto& [name, curve] : curves) reports.push_back(backtest::econ_metrics(curve, rc.sharpe));
  write_file(rc.out / "econ.csv", [&](std::ostream& o) {
    o << "strategy,accumulative_return,monthly_return,sharpe_ratio,daily_return,max_drawdown\n";
    for (std::size_t i = 0; i < curves.size(); ++i) {
      const auto& r = reports[i];
      o << curves[i].first << ',' << csv::format_double(r.accumulative_return) << ','
        << csv::format_double(r.monthly_return) << ',' << csv::format_double(r.sharpe_ratio) << ','
        << csv::format_double(r.daily_return) << ',' << csv::format_double(r.max_drawdown) << '\n';
    }
  });
  for (const auto& [name, curve] : curves) {
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
    write_file(rc.out / ("equity_" + lower + ".csv"), [&](std::ostream& o) { backtest::write_equity_csv(o, curve); });
  }
  return reports;
}

void cmd_synth(const synth::SyntheticConfig& config, const fs::path& dir) {
  synth::write(synth::generate(config), dir, config.seed);
}

}  // namespace tdse::cli
