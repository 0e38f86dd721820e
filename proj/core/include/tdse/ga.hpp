#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tdse/extractors.hpp"
#include "tdse/meta.hpp"

namespace tdse::ga {

/// A gene draws from a finite grid of values (categorical choices and
/// integer ranges alike) or from a real interval.
struct Gene {
  std::string name;
  std::vector<double> choices;  // empty for a real interval
  double lo = 0.0;
  double hi = 0.0;

  static Gene grid(std::string name, std::vector<double> values);
  static Gene range(std::string name, int lo, int hi, int step = 1);
  static Gene real(std::string name, double lo, double hi);

  double sample(Rng& rng) const;
  bool contains(double v) const;
};

using Schema = std::vector<Gene>;

struct Genome {
  std::vector<double> genes;
  double fitness = 0.0;
  bool evaluated = false;
};

/// Seed for evaluating a genome: depends on the run seed and the gene
/// values only, so equal genomes always score the same.
std::uint64_t genome_seed(std::uint64_t run_seed, std::span<const double> genes);

struct GaConfig {
  std::size_t population = 50;
  std::size_t generations = 20;  // H
  std::size_t stall = 5;         // SH
  double selection_rate = 0.3;
  double crossover_rate = 0.8;
  double mutation_rate = 0.05;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

void validate(const GaConfig& config);

struct Evaluation {
  double fitness = 0.0;
  std::vector<std::string> chosen;  // per-window meta-classifier, when applicable
  std::string diagnostic;
};

using FitnessFn = std::function<Evaluation(const std::vector<double>& genes, std::uint64_t seed)>;

struct GenerationRecord {
  std::size_t generation = 0;  // 0 = initial population
  double best_fitness = 0.0;
  std::vector<double> best_genes;
  std::vector<std::string> chosen;
};

struct GaResult {
  Genome best;
  std::vector<GenerationRecord> history;
  std::size_t evaluations = 0;  // distinct genomes scored
  std::vector<std::string> diagnostics;
};

/// Elitist GA: the top ceil(selection_rate * n) individuals survive; the rest
/// are children of two uniformly drawn elites (uniform crossover with
/// probability crossover_rate, else a copy of the first) with per-gene
/// mutation. Stops after `generations` generations or once the best fitness
/// has not strictly improved for more than `stall` consecutive generations.
/// Throwing evaluations score 0 and are recorded as diagnostics.
GaResult evolve(const GaConfig& config, const Schema& schema, const FitnessFn& fitness);

/// JSON lines: {"generation", "best_fitness", "chosen_per_window", "best_genes"}.
void write_run_log(std::ostream& out, const Schema& schema, const GaResult& result);

// Search spaces.

/// The eleven Stage-2 genes on their search grids.
Schema stage2_schema();
meta::MetaHyper to_meta_hyper(std::span<const double> genes);
std::vector<double> from_meta_hyper(const meta::MetaHyper& h);

/// Eight MBCNN genes.
Schema mbcnn_schema();
extract::MbcnnHyper to_mbcnn_hyper(std::span<const double> genes);
std::vector<double> from_mbcnn_hyper(const extract::MbcnnHyper& h);

/// Eight SC-MBCNN genes.
Schema sc_mbcnn_schema();
extract::ScMbcnnHyper to_sc_mbcnn_hyper(std::span<const double> genes);
std::vector<double> from_sc_mbcnn_hyper(const extract::ScMbcnnHyper& h);

/// Five genes per provider plus a shared batch size (26 for five providers).
Schema rnn_er_schema(std::size_t providers);
extract::RnnErHyper to_rnn_er_hyper(std::span<const double> genes, std::size_t providers);
std::vector<double> from_rnn_er_hyper(const extract::RnnErHyper& h, std::size_t providers);

}  // namespace tdse::ga
