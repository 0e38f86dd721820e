#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tdse/backtest.hpp"
#include "tdse/config.hpp"
#include "tdse/data_model.hpp"
#include "tdse/ga.hpp"
#include "tdse/meta.hpp"
#include "tdse/pipeline.hpp"
#include "tdse/synthetic.hpp"

namespace tdse::cli {

/// Every key a config file may contain. Each can be overridden by the
/// environment variable TDSE_<KEY> with dots replaced by underscores.
const std::vector<std::string>& known_keys();

struct RunConfig {
  Config raw;
  std::filesystem::path data_dir;  // relative data paths resolve against this
  std::filesystem::path target;
  std::filesystem::path branches;
  std::filesystem::path global_dir;
  std::filesystem::path industry;
  std::vector<std::string> providers;
  std::filesystem::path sentiment_dir;  // precomputed sentiment_<provider>.csv; empty = build from news
  std::filesystem::path news_dir;
  std::filesystem::path lexicon_positive;
  std::filesystem::path lexicon_negative;
  std::filesystem::path stopwords;  // optional
  std::filesystem::path snapshot;   // default <out>/snapshot
  data::AlignmentPolicy policy;
  data::TieRule tie = data::TieRule::ZeroIsDown;
  data::WindowConfig windows;
  data::LagConfig lags;

  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::filesystem::path out;

  pipeline::Stage1Hyper stage1;
  meta::MetaHyper stage2;
  ga::GaConfig ga_stage1;
  ga::GaConfig ga_stage2;

  std::uint64_t random_seed = 0;
  backtest::SharpeBasis sharpe = backtest::SharpeBasis::Monthly;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::filesystem::path> out;
};

/// Reads the config (if any), applies environment then command-line
/// overrides and validates. The seed is mandatory.
RunConfig load_run_config(const std::optional<std::filesystem::path>& path, const Overrides& overrides);
RunConfig make_run_config(Config config, const std::filesystem::path& base, const Overrides& overrides);

/// Loads raw sources, builds sentiment indices and writes the aligned
/// snapshot plus `alignment.json` into the snapshot directory.
data::MultiSourceDataset cmd_ingest(const RunConfig& rc);

/// Dataset from a snapshot written by cmd_ingest.
data::MultiSourceDataset load_snapshot(const RunConfig& rc);

struct RunSummary {
  std::vector<pipeline::WindowOutcome> outcomes;
  std::vector<pipeline::WindowFeatures> features;
  double mean_accuracy = 0.0;
  double random_accuracy = 0.0;
};

/// Fixed hyper-parameters. Writes report.csv/json, schedule.csv,
/// predictions.csv, extractors.csv, summary.json and checkpoints/.
RunSummary cmd_train(const RunConfig& rc);

/// Stage-1 GA per window and extractor, then the Stage-2 GA over the fitness
/// windows; the final run uses the best genomes. Also writes the GA logs,
/// best_genome.json and holdout.json.
RunSummary cmd_optimize(const RunConfig& rc);

/// Per-window metrics from a predictions file; with `against`, a paired
/// t-test of per-window accuracies.
void cmd_evaluate(const RunConfig& rc, const std::filesystem::path& predictions,
                  const std::optional<std::filesystem::path>& against);

/// TDSE signals, Buy & Hold and Random over the signal span: econ.csv and
/// equity_<strategy>.csv.
std::vector<backtest::EconReport> cmd_backtest(const RunConfig& rc, const std::filesystem::path& signals);

/// Writes a synthetic raw-data directory with its tdse.cfg.
void cmd_synth(const synth::SyntheticConfig& config, const std::filesystem::path& dir);

}  // namespace tdse::cli
