#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tdse/data_model.hpp"
#include "tdse/ensemble.hpp"
#include "tdse/evaluation.hpp"
#include "tdse/extractors.hpp"
#include "tdse/ga.hpp"

namespace tdse::pipeline {

struct Stage1Hyper {
  extract::MbcnnHyper mbcnn;
  extract::ScMbcnnHyper sc;
  extract::RnnErHyper rnn;
};

/// Sample matrix, windows and the extractor input tensors built from it.
struct Prepared {
  data::SampleMatrix samples;
  std::vector<data::WindowSplit> windows;
  std::vector<std::string> industry_names;
  std::vector<extract::Tensor> global;
  extract::Tensor industry;
  std::vector<extract::Tensor> providers;
  std::vector<int> labels;
};

Prepared prepare(const data::MultiSourceDataset& dataset, const data::LagConfig& lags,
                 const data::WindowConfig& windows);

/// Sample indices of one window's segments. Extractor-train is split 80/20
/// into fit and validation rows.
struct WindowRows {
  std::vector<std::size_t> extractor;
  extract::FitSplit split;
  std::vector<std::size_t> meta;
  std::vector<std::size_t> test;
  std::vector<bool> scored;  // per test row
};

/// `window` is 1-based.
WindowRows window_rows(const Prepared& prepared, std::size_t window);

enum class ExtractorKind { Global, Industry, Media };

inline constexpr std::array<ExtractorKind, 3> kExtractors = {ExtractorKind::Global, ExtractorKind::Industry,
                                                             ExtractorKind::Media};

const char* to_string(ExtractorKind kind);

/// Base seed of one extractor in one window. The training seed mixes in the
/// hyper-parameter genes, so a Stage-1 GA evaluation and the later retrain
/// with the same genes produce the same model.
std::uint64_t extractor_seed(std::uint64_t seed, std::size_t window, ExtractorKind kind);

/// Genes of the extractor's part of `hyper`.
std::vector<double> extractor_genes(const Stage1Hyper& hyper, ExtractorKind kind, std::size_t providers);

struct WindowFeatures {
  std::size_t window = 0;
  std::vector<std::size_t> meta_rows;
  meta::Rows meta_X;
  std::vector<int> meta_y;
  meta::Rows test_X;
  std::vector<int> test_y;
  std::vector<std::size_t> test_rows;
  std::vector<bool> scored;
  std::array<double, 3> validation_accuracy{};  // per extractor
  std::size_t clusters = 0;
};

/// Trains the three extractors of one window on its extractor-train rows and
/// stacks their outputs on the meta-train and test rows. Writes checkpoints
/// into `checkpoint_dir` when it is non-empty.
WindowFeatures window_features(const Prepared& prepared, std::size_t window, const Stage1Hyper& hyper,
                               std::uint64_t seed, const std::filesystem::path& checkpoint_dir = {});

/// All windows, processed concurrently. `hyper` holds one entry per window or
/// a single entry shared by all.
std::vector<WindowFeatures> all_features(const Prepared& prepared, std::span<const Stage1Hyper> hyper,
                                         std::uint64_t seed, std::size_t workers,
                                         const std::filesystem::path& checkpoint_dir = {});

struct WindowOutcome {
  ensemble::ScheduleEntry schedule;
  meta::Predictions predictions;  // on the test rows
  eval::WindowReport report;
};

/// Dynamic selection and test prediction for each given window. Candidate
/// seeds depend on `seed` and the window only.
std::vector<WindowOutcome> run_stage2(std::span<const WindowFeatures> features, const meta::MetaHyper& hyper,
                                      std::uint64_t seed, std::size_t workers,
                                      ensemble::FitCache* cache = nullptr);

double mean_accuracy(std::span<const WindowOutcome> outcomes);

/// Windows scored by the Stage-2 fitness: all but the last (the holdout),
/// or the only one.
std::size_t fitness_window_count(std::size_t windows);

/// Stage-1 GA for one extractor in one window; fitness = validation accuracy.
ga::GaResult optimize_stage1(const Prepared& prepared, std::size_t window, ExtractorKind kind,
                             const ga::GaConfig& config, std::uint64_t seed);

/// Applies the best genes of a Stage-1 run onto `hyper`.
void apply_stage1(Stage1Hyper& hyper, ExtractorKind kind, std::span<const double> genes, std::size_t providers);

/// Stage-2 GA; fitness = mean test accuracy over the fitness windows.
ga::GaResult optimize_stage2(std::span<const WindowFeatures> features, const ga::GaConfig& config,
                             std::uint64_t seed);

/// Accuracy of fair-coin predictions on the scored test rows of each window, averaged.
double random_baseline_accuracy(std::span<const WindowFeatures> features, std::uint64_t seed);

}  // namespace tdse::pipeline
