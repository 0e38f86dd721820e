#include "tdse/pipeline.hpp"

#include <fstream>
#include <functional>
#include <numeric>

#include "tdse/error.hpp"
#include "tdse/parallel.hpp"

namespace tdse::pipeline {

namespace fs = std::filesystem;

Prepared prepare(const data::MultiSourceDataset& dataset, const data::LagConfig& lags,
                 const data::WindowConfig& windows) {
  Prepared p;
  p.samples = data::assemble_features(dataset, lags);
  p.windows = data::build_windows(dataset.calendar, windows);
  p.industry_names = dataset.industry_names;
  p.global = extract::global_inputs(p.samples);
  p.industry = extract::industry_input(p.samples);
  p.providers = extract::provider_inputs(p.samples);
  p.labels = extract::label_vector(p.samples);
  return p;
}

WindowRows window_rows(const Prepared& p, std::size_t window) {
  if (window < 1 || window > p.windows.size()) {
    throw Error(ErrorCode::InvalidConfig, "window " + std::to_string(window) + " out of range");
  }
  const auto& w = p.windows[window - 1];
  WindowRows r;
  r.extractor = p.samples.samples_in(w.extractor_train);
  r.split = extract::split_fit_validation(r.extractor);
  r.meta = p.samples.samples_in(w.meta_train);
  r.test = p.samples.samples_in(w.test);
  for (auto i : r.test) r.scored.push_back(w.scored.contains(p.samples.day[i]));
  const std::string where = "window " + std::to_string(window);
  if (r.split.validation.empty()) throw Error(ErrorCode::EmptyValidation, where + ": no extractor validation rows");
  if (r.meta.empty()) throw Error(ErrorCode::EmptyResult, where + ": no meta-train samples");
  if (r.test.empty()) throw Error(ErrorCode::EmptyResult, where + ": no test samples");
  return r;
}

const char* to_string(ExtractorKind kind) {
  switch (kind) {
    case ExtractorKind::Global: return "mbcnn";
    case ExtractorKind::Industry: return "sc_mbcnn";
    case ExtractorKind::Media: return "rnn_er";
  }
  return "?";
}

std::uint64_t extractor_seed(std::uint64_t seed, std::size_t window, ExtractorKind kind) {
  return derive_seed(seed, {0x51, window, static_cast<std::uint64_t>(kind)});
}

std::vector<double> extractor_genes(const Stage1Hyper& h, ExtractorKind kind, std::size_t providers) {
  switch (kind) {
    case ExtractorKind::Global: return ga::from_mbcnn_hyper(h.mbcnn);
    case ExtractorKind::Industry: return ga::from_sc_mbcnn_hyper(h.sc);
    case ExtractorKind::Media: return ga::from_rnn_er_hyper(h.rnn, providers);
  }
  return {};
}

void apply_stage1(Stage1Hyper& h, ExtractorKind kind, std::span<const double> genes, std::size_t providers) {
  switch (kind) {
    case ExtractorKind::Global: h.mbcnn = ga::to_mbcnn_hyper(genes); break;
    case ExtractorKind::Industry: h.sc = ga::to_sc_mbcnn_hyper(genes); break;
    case ExtractorKind::Media: h.rnn = ga::to_rnn_er_hyper(genes, providers); break;
  }
}

namespace {

std::uint64_t training_seed(const Prepared& p, std::uint64_t seed, std::size_t window, const Stage1Hyper& h,
                            ExtractorKind kind) {
  const auto genes = extractor_genes(h, kind, p.providers.size());
  return ga::genome_seed(extractor_seed(seed, window, kind), genes);
}

std::vector<std::string> provider_names(const Prepared& p) { return p.samples.providers; }

void save_text(const fs::path& path, const std::function<void(std::ostream&)>& write) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  write(out);
}

meta::Rows stack_rows(const std::vector<er::ProbabilityPair>& g, const std::vector<er::ProbabilityPair>& i,
                      const std::vector<er::ProbabilityPair>& m, std::span<const std::size_t> rows) {
  std::vector<er::ProbabilityPair> a, b, c;
  for (auto r : rows) {
    a.push_back(g[r]);
    b.push_back(i[r]);
    c.push_back(m[r]);
  }
  return ensemble::stack_features(a, b, c);
}

std::vector<int> labels_at(const Prepared& p, std::span<const std::size_t> rows) {
  std::vector<int> out;
  for (auto r : rows) out.push_back(p.labels[r]);
  return out;
}

}  // namespace

WindowFeatures window_features(const Prepared& p, std::size_t window, const Stage1Hyper& h, std::uint64_t seed,
                               const fs::path& checkpoint_dir) {
  const WindowRows rows = window_rows(p, window);
  const auto& fit = rows.split.fit;
  const auto& val = rows.split.validation;

  auto global = extract::train_mbcnn(p.global, p.labels, fit, val, h.mbcnn,
                                     training_seed(p, seed, window, h, ExtractorKind::Global));
  auto industry = extract::train_sc_mbcnn(p.industry, p.industry_names, p.labels, rows.extractor, fit, val, h.sc,
                                          training_seed(p, seed, window, h, ExtractorKind::Industry));
  const auto names = provider_names(p);
  auto media = extract::train_rnn_er(names, p.providers, p.labels, fit, val, h.rnn,
                                     training_seed(p, seed, window, h, ExtractorKind::Media));

  const auto pg = extract::predict_mbcnn(global, p.global);
  const auto pi = extract::predict_sc_mbcnn(industry, p.industry);
  const auto pm = extract::predict_rnn_er(media, p.providers);

  WindowFeatures f;
  f.window = window;
  f.meta_rows = rows.meta;
  f.meta_X = stack_rows(pg, pi, pm, rows.meta);
  f.meta_y = labels_at(p, rows.meta);
  f.test_X = stack_rows(pg, pi, pm, rows.test);
  f.test_y = labels_at(p, rows.test);
  f.test_rows = rows.test;
  f.scored = rows.scored;
  f.validation_accuracy = {global.validation_accuracy, industry.network.validation_accuracy,
                           media.validation_accuracy};
  f.clusters = industry.members.size();

  if (!checkpoint_dir.empty()) {
    fs::create_directories(checkpoint_dir);
    const std::string stem = "window_" + std::to_string(window) + "_";
    save_text(checkpoint_dir / (stem + "mbcnn.txt"), [&](std::ostream& o) { global.net.save(o); });
    save_text(checkpoint_dir / (stem + "sc_mbcnn.txt"), [&](std::ostream& o) { industry.network.net.save(o); });
    save_text(checkpoint_dir / (stem + "clusters.csv"), [&](std::ostream& o) {
      o << "industry,cluster\n";
      for (std::size_t c = 0; c < industry.members.size(); ++c) {
        for (auto i : industry.members[c]) o << p.industry_names[i] << ',' << c << '\n';
      }
    });
    for (std::size_t i = 0; i < media.providers.size(); ++i) {
      save_text(checkpoint_dir / (stem + "rnn_" + names[i] + ".txt"),
                [&](std::ostream& o) { media.providers[i].net.save(o); });
    }
  }
  return f;
}

std::vector<WindowFeatures> all_features(const Prepared& p, std::span<const Stage1Hyper> hyper, std::uint64_t seed,
                                         std::size_t workers, const fs::path& checkpoint_dir) {
  const std::size_t W = p.windows.size();
  if (hyper.size() != 1 && hyper.size() != W) {
    throw Error(ErrorCode::InvalidConfig, "need one Stage-1 setting or one per window");
  }
  std::vector<WindowFeatures> out(W);
  parallel_for(W, workers, [&](std::size_t w) {
    out[w] = window_features(p, w + 1, hyper[hyper.size() == 1 ? 0 : w], seed, checkpoint_dir);
  });
  return out;
}

std::vector<WindowOutcome> run_stage2(std::span<const WindowFeatures> features, const meta::MetaHyper& hyper,
                                      std::uint64_t seed, std::size_t workers, ensemble::FitCache* cache) {
  std::vector<WindowOutcome> out(features.size());
  parallel_for(features.size(), workers, [&](std::size_t i) {
    const auto& f = features[i];
    WindowOutcome o;
    o.schedule = ensemble::select_meta(f.window, f.meta_X, f.meta_y, hyper, seed, cache, 1);
    o.predictions = ensemble::predict_window(o.schedule, f.test_X);
    o.report.window = f.window;
    o.report.samples = f.test_y.size();
    o.report.metrics = eval::evaluate(o.predictions.labels, o.predictions.scores, f.test_y);
    out[i] = std::move(o);
  });
  return out;
}

double mean_accuracy(std::span<const WindowOutcome> outcomes) {
  if (outcomes.empty()) return 0.0;
  double s = 0.0;
  for (const auto& o : outcomes) s += o.report.metrics.accuracy;
  return s / static_cast<double>(outcomes.size());
}

std::size_t fitness_window_count(std::size_t windows) { return windows > 1 ? windows - 1 : windows; }

ga::GaResult optimize_stage1(const Prepared& p, std::size_t window, ExtractorKind kind, const ga::GaConfig& config,
                             std::uint64_t seed) {
  const WindowRows rows = window_rows(p, window);
  const std::size_t providers = p.providers.size();
  const auto names = provider_names(p);
  ga::Schema schema;
  switch (kind) {
    case ExtractorKind::Global: schema = ga::mbcnn_schema(); break;
    case ExtractorKind::Industry: schema = ga::sc_mbcnn_schema(); break;
    case ExtractorKind::Media: schema = ga::rnn_er_schema(providers); break;
  }
  ga::GaConfig c = config;
  c.seed = extractor_seed(seed, window, kind);
  const auto& fit = rows.split.fit;
  const auto& val = rows.split.validation;
  return ga::evolve(c, schema, [&](const std::vector<double>& genes, std::uint64_t s) {
    ga::Evaluation e;
    switch (kind) {
      case ExtractorKind::Global:
        e.fitness = extract::train_mbcnn(p.global, p.labels, fit, val, ga::to_mbcnn_hyper(genes), s)
                        .validation_accuracy;
        break;
      case ExtractorKind::Industry:
        e.fitness = extract::train_sc_mbcnn(p.industry, p.industry_names, p.labels, rows.extractor, fit, val,
                                            ga::to_sc_mbcnn_hyper(genes), s)
                        .network.validation_accuracy;
        break;
      case ExtractorKind::Media:
        e.fitness = extract::train_rnn_er(names, p.providers, p.labels, fit, val,
                                          ga::to_rnn_er_hyper(genes, providers), s)
                        .validation_accuracy;
        break;
    }
    return e;
  });
}

ga::GaResult optimize_stage2(std::span<const WindowFeatures> features, const ga::GaConfig& config,
                             std::uint64_t seed) {
  const std::size_t K = fitness_window_count(features.size());
  const auto scored = features.first(K);
  ensemble::FitCache cache;
  ga::GaConfig c = config;
  c.seed = derive_seed(seed, {0x52});
  // Candidate seeds depend on the run seed and window only, so fits shared
  // between genomes come from the cache.
  return ga::evolve(c, ga::stage2_schema(), [&](const std::vector<double>& genes, std::uint64_t) {
    const auto outcomes = run_stage2(scored, ga::to_meta_hyper(genes), seed, 1, &cache);
    ga::Evaluation e;
    e.fitness = mean_accuracy(outcomes);
    for (const auto& o : outcomes) e.chosen.push_back(meta::to_string(o.schedule.chosen));
    return e;
  });
}

double random_baseline_accuracy(std::span<const WindowFeatures> features, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x7a}));
  double total = 0.0;
  std::size_t windows = 0;
  for (const auto& f : features) {
    std::size_t hit = 0, n = 0;
    for (std::size_t i = 0; i < f.test_y.size(); ++i) {
      const int guess = rng.bernoulli(0.5) ? 1 : 0;
      if (!f.scored[i]) continue;
      hit += guess == f.test_y[i] ? 1 : 0;
      ++n;
    }
    if (n == 0) continue;
    total += static_cast<double>(hit) / static_cast<double>(n);
    ++windows;
  }
  return windows ? total / static_cast<double>(windows) : 0.0;
}

}  // namespace tdse::pipeline
