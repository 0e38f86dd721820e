#include "tdse/ga.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>

#include <json.hpp>

#include "tdse/error.hpp"
#include "tdse/parallel.hpp"

namespace tdse::ga {

Gene Gene::grid(std::string name, std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidConfig, "gene '" + name + "' has no values");
  Gene g;
  g.name = std::move(name);
  g.choices = std::move(values);
  return g;
}

Gene Gene::range(std::string name, int lo, int hi, int step) {
  std::vector<double> v;
  for (int x = lo; x <= hi; x += step) v.push_back(x);
  return grid(std::move(name), std::move(v));
}

Gene Gene::real(std::string name, double lo, double hi) {
  if (!(hi >= lo)) throw Error(ErrorCode::InvalidConfig, "gene '" + name + "' has an empty interval");
  Gene g;
  g.name = std::move(name);
  g.lo = lo;
  g.hi = hi;
  return g;
}

double Gene::sample(Rng& rng) const {
  if (!choices.empty()) return choices[rng.index(choices.size())];
  return rng.uniform(lo, hi);
}

bool Gene::contains(double v) const {
  if (!choices.empty()) return std::find(choices.begin(), choices.end(), v) != choices.end();
  return v >= lo && v <= hi;
}

std::uint64_t genome_seed(std::uint64_t run_seed, std::span<const double> genes) {
  std::uint64_t h = mix_seed(run_seed);
  for (double g : genes) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &g, sizeof bits);
    h = mix_seed(h ^ bits);
  }
  return h;
}

void validate(const GaConfig& c) {
  const auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (c.population < 1 || c.generations < 1) throw Error(ErrorCode::InvalidConfig, "GA sizes must be at least 1");
  if (!unit(c.selection_rate) || !unit(c.crossover_rate) || !unit(c.mutation_rate)) {
    throw Error(ErrorCode::InvalidConfig, "GA rates must lie in [0, 1]");
  }
}

GaResult evolve(const GaConfig& config, const Schema& schema, const FitnessFn& fitness) {
  validate(config);
  if (schema.empty()) throw Error(ErrorCode::InvalidConfig, "GA schema is empty");
  const std::size_t n = config.population;
  const std::size_t elite_count = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(config.selection_rate * static_cast<double>(n) - 1e-9)), 1, n);

  GaResult result;
  std::map<std::vector<double>, Evaluation> memo;

  const auto evaluate = [&](std::vector<Genome>& pop) {
    std::vector<std::size_t> todo;
    std::vector<std::vector<double>> keys;
    for (std::size_t i = 0; i < pop.size(); ++i) {
      if (pop[i].evaluated) continue;
      if (const auto it = memo.find(pop[i].genes); it != memo.end()) {
        pop[i].fitness = it->second.fitness;
        pop[i].evaluated = true;
        continue;
      }
      if (std::find(keys.begin(), keys.end(), pop[i].genes) == keys.end()) keys.push_back(pop[i].genes);
      todo.push_back(i);
    }
    std::vector<Evaluation> scores(keys.size());
    parallel_for(keys.size(), config.workers, [&](std::size_t k) {
      try {
        scores[k] = fitness(keys[k], genome_seed(config.seed, keys[k]));
      } catch (const std::exception& e) {
        scores[k] = Evaluation{0.0, {}, e.what()};
      }
      if (!std::isfinite(scores[k].fitness)) scores[k].fitness = 0.0;
    });
    for (std::size_t k = 0; k < keys.size(); ++k) {
      if (!scores[k].diagnostic.empty()) result.diagnostics.push_back(scores[k].diagnostic);
      memo.emplace(keys[k], scores[k]);
    }
    result.evaluations += keys.size();
    for (auto i : todo) {
      pop[i].fitness = memo.at(pop[i].genes).fitness;
      pop[i].evaluated = true;
    }
  };

  // Stable ranking: fitness descending, earlier individual first on ties.
  const auto rank = [](std::vector<Genome>& pop) {
    std::stable_sort(pop.begin(), pop.end(), [](const Genome& a, const Genome& b) { return a.fitness > b.fitness; });
  };

  Rng rng(derive_seed(config.seed, {0x6a}));
  std::vector<Genome> pop(n);
  for (auto& g : pop) {
    for (const auto& gene : schema) g.genes.push_back(gene.sample(rng));
  }
  evaluate(pop);
  rank(pop);
  result.best = pop[0];
  const auto record = [&](std::size_t generation) {
    result.history.push_back(
        {generation, result.best.fitness, result.best.genes, memo.at(result.best.genes).chosen});
  };
  record(0);

  std::size_t stalled = 0;
  for (std::size_t gen = 1; gen <= config.generations; ++gen) {
    std::vector<Genome> next(pop.begin(), pop.begin() + static_cast<std::ptrdiff_t>(elite_count));
    while (next.size() < n) {
      const Genome& a = pop[rng.index(elite_count)];
      const Genome& b = pop[rng.index(elite_count)];
      Genome child;
      child.genes = a.genes;
      if (rng.bernoulli(config.crossover_rate)) {
        for (std::size_t k = 0; k < schema.size(); ++k) {
          if (rng.bernoulli(0.5)) child.genes[k] = b.genes[k];
        }
      }
      for (std::size_t k = 0; k < schema.size(); ++k) {
        if (rng.bernoulli(config.mutation_rate)) child.genes[k] = schema[k].sample(rng);
      }
      next.push_back(std::move(child));
    }
    pop = std::move(next);
    evaluate(pop);
    rank(pop);
    if (pop[0].fitness > result.best.fitness) {
      result.best = pop[0];
      stalled = 0;
    } else {
      ++stalled;
    }
    record(gen);
    if (stalled > config.stall) break;
  }
  return result;
}

void write_run_log(std::ostream& out, const Schema& schema, const GaResult& result) {
  for (const auto& rec : result.history) {
    nlohmann::ordered_json j;
    j["generation"] = rec.generation;
    j["best_fitness"] = rec.best_fitness;
    j["chosen_per_window"] = rec.chosen;
    nlohmann::ordered_json genes = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < schema.size() && k < rec.best_genes.size(); ++k) {
      genes[schema[k].name] = rec.best_genes[k];
    }
    j["best_genes"] = genes;
    out << j.dump() << '\n';
  }
}

// ----------------------------------------------------------------- schemas

namespace {

std::size_t as_size(double v) { return static_cast<std::size_t>(std::llround(v)); }

void require_length(std::span<const double> genes, std::size_t n, const char* what) {
  if (genes.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + " genome needs " + std::to_string(n) + " genes, got " +
                                              std::to_string(genes.size()));
  }
}

const std::vector<double> kC = {0.1, 1, 10, 100, 1000};
const std::vector<double> kEpochs = {10, 20, 30, 40, 60};
const std::vector<double> kRates = {1e-3, 3e-3, 5e-3, 1e-2};
const std::vector<double> kBatches = {16, 32, 64};

}  // namespace

Schema stage2_schema() {
  return {
      Gene::grid("lr_C", kC),
      Gene::range("knn_k", 2, 20),
      Gene::grid("rbf_C", kC),
      Gene::grid("rbf_gamma", {0.1, 0.5, 1, 1.5, 2, 2.5}),
      Gene::grid("poly_C", kC),
      Gene::range("poly_degree", 2, 10),
      Gene::range("rf_trees", 5, 50, 5),
      Gene::range("et_trees", 5, 50, 5),
      Gene::range("ann_width1", 2, 50),
      Gene::range("ann_width2", 2, 50),
      Gene::range("ann_width3", 2, 50),
  };
}

meta::MetaHyper to_meta_hyper(std::span<const double> g) {
  require_length(g, 11, "Stage-2");
  meta::MetaHyper h;
  h.lr_C = g[0];
  h.knn_k = as_size(g[1]);
  h.rbf_C = g[2];
  h.rbf_gamma = g[3];
  h.poly_C = g[4];
  h.poly_degree = static_cast<int>(std::llround(g[5]));
  h.rf_trees = as_size(g[6]);
  h.et_trees = as_size(g[7]);
  h.ann_widths = {as_size(g[8]), as_size(g[9]), as_size(g[10])};
  return h;
}

std::vector<double> from_meta_hyper(const meta::MetaHyper& h) {
  return {h.lr_C,
          static_cast<double>(h.knn_k),
          h.rbf_C,
          h.rbf_gamma,
          h.poly_C,
          static_cast<double>(h.poly_degree),
          static_cast<double>(h.rf_trees),
          static_cast<double>(h.et_trees),
          static_cast<double>(h.ann_widths[0]),
          static_cast<double>(h.ann_widths[1]),
          static_cast<double>(h.ann_widths[2])};
}

Schema mbcnn_schema() {
  return {
      Gene::range("kernel", 1, 3),        Gene::range("filters", 1, 4),
      Gene::grid("dense_width", {4, 8, 16, 32}), Gene::grid("epochs", kEpochs),
      Gene::grid("learning_rate", kRates), Gene::grid("batch_size", kBatches),
      Gene::grid("bn_momentum", {0.8, 0.9, 0.95, 0.99}), Gene::grid("l2", {0, 1e-4, 1e-3, 1e-2}),
  };
}

extract::MbcnnHyper to_mbcnn_hyper(std::span<const double> g) {
  require_length(g, 8, "MBCNN");
  extract::MbcnnHyper h;
  h.kernel = as_size(g[0]);
  h.filters = as_size(g[1]);
  h.dense_width = as_size(g[2]);
  h.epochs = as_size(g[3]);
  h.learning_rate = g[4];
  h.batch_size = as_size(g[5]);
  h.bn_momentum = g[6];
  h.l2 = g[7];
  return h;
}

std::vector<double> from_mbcnn_hyper(const extract::MbcnnHyper& h) {
  return {static_cast<double>(h.kernel),      static_cast<double>(h.filters), static_cast<double>(h.dense_width),
          static_cast<double>(h.epochs),      h.learning_rate,                static_cast<double>(h.batch_size),
          h.bn_momentum,                      h.l2};
}

Schema sc_mbcnn_schema() {
  return {
      Gene::range("kernel", 1, 3),        Gene::range("filters", 1, 4),
      Gene::grid("dense_width", {4, 8, 16, 32}), Gene::grid("epochs", kEpochs),
      Gene::grid("learning_rate", kRates), Gene::grid("batch_size", kBatches),
      Gene::grid("sigma_scale", {0.5, 1, 2, 4}), Gene::grid("cluster_count", {0, 2, 3, 4, 5, 6}),
  };
}

extract::ScMbcnnHyper to_sc_mbcnn_hyper(std::span<const double> g) {
  require_length(g, 8, "SC-MBCNN");
  extract::ScMbcnnHyper h;
  h.kernel = as_size(g[0]);
  h.filters = as_size(g[1]);
  h.dense_width = as_size(g[2]);
  h.epochs = as_size(g[3]);
  h.learning_rate = g[4];
  h.batch_size = as_size(g[5]);
  h.sigma_scale = g[6];
  h.cluster_count = as_size(g[7]);
  return h;
}

std::vector<double> from_sc_mbcnn_hyper(const extract::ScMbcnnHyper& h) {
  return {static_cast<double>(h.kernel),     static_cast<double>(h.filters), static_cast<double>(h.dense_width),
          static_cast<double>(h.epochs),     h.learning_rate,                static_cast<double>(h.batch_size),
          h.sigma_scale,                     static_cast<double>(h.cluster_count)};
}

Schema rnn_er_schema(std::size_t providers) {
  Schema s;
  for (std::size_t p = 0; p < providers; ++p) {
    const std::string pre = "p" + std::to_string(p) + ".";
    s.push_back(Gene::grid(pre + "hidden1", {4, 8, 16}));
    s.push_back(Gene::grid(pre + "hidden2", {4, 8, 16}));
    s.push_back(Gene::grid(pre + "learning_rate", {1e-3, 3e-3, 1e-2}));
    s.push_back(Gene::grid(pre + "epochs", {10, 20, 40}));
    s.push_back(Gene::grid(pre + "weight", {0.5, 1, 1.5, 2}));
  }
  s.push_back(Gene::grid("batch_size", kBatches));
  return s;
}

extract::RnnErHyper to_rnn_er_hyper(std::span<const double> g, std::size_t providers) {
  require_length(g, providers * 5 + 1, "RNN-ER");
  extract::RnnErHyper h;
  for (std::size_t p = 0; p < providers; ++p) {
    extract::ProviderHyper ph;
    ph.hidden1 = as_size(g[p * 5]);
    ph.hidden2 = as_size(g[p * 5 + 1]);
    ph.learning_rate = g[p * 5 + 2];
    ph.epochs = as_size(g[p * 5 + 3]);
    ph.weight = g[p * 5 + 4];
    h.providers.push_back(ph);
  }
  h.batch_size = as_size(g[providers * 5]);
  return h;
}

std::vector<double> from_rnn_er_hyper(const extract::RnnErHyper& h, std::size_t providers) {
  std::vector<double> g;
  for (std::size_t p = 0; p < providers; ++p) {
    const auto ph = h.provider(p);
    g.insert(g.end(), {static_cast<double>(ph.hidden1), static_cast<double>(ph.hidden2), ph.learning_rate,
                       static_cast<double>(ph.epochs), ph.weight});
  }
  g.push_back(static_cast<double>(h.batch_size));
  return g;
}

}  // namespace tdse::ga
