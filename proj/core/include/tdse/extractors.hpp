#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tdse/data_model.hpp"
#include "tdse/er_fusion.hpp"
#include "tdse/nn.hpp"
#include "tdse/spectral.hpp"

namespace tdse::extract {

using er::ProbabilityPair;
using nn::Tensor;

/// Every train_* call below bumps this counter.
std::uint64_t training_calls();

inline constexpr std::size_t kMinTrainingSamples = 50;

struct MbcnnHyper {
  std::size_t kernel = 2;
  std::size_t filters = 2;
  std::size_t dense_width = 16;
  std::size_t epochs = 40;
  double learning_rate = 5e-3;
  std::size_t batch_size = 32;
  double bn_momentum = 0.9;
  double l2 = 0.0;
};

struct ScMbcnnHyper {
  std::size_t kernel = 2;
  std::size_t filters = 2;
  std::size_t dense_width = 16;
  std::size_t epochs = 40;
  double learning_rate = 5e-3;
  std::size_t batch_size = 32;
  double sigma_scale = 1.0;        // multiplies the median pairwise distance
  std::size_t cluster_count = 0;   // 0 = elbow choice

  MbcnnHyper network() const;
};

struct ProviderHyper {
  std::size_t hidden1 = 8;
  std::size_t hidden2 = 8;
  double learning_rate = 5e-3;
  std::size_t epochs = 40;
  double weight = 1.0;  // ER importance before renormalization
};

struct RnnErHyper {
  std::vector<ProviderHyper> providers;  // one per provider; missing entries use defaults
  std::size_t batch_size = 32;

  ProviderHyper provider(std::size_t i) const { return i < providers.size() ? providers[i] : ProviderHyper{}; }
};

/// Per-position z-scoring of a [N, ...] tensor; statistics come from the fit rows.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Tensor& x, std::span<const std::size_t> rows);
  Tensor apply(const Tensor& x) const;
};

/// Copies the given leading-dimension rows.
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);

/// Chronological 80/20 split of a sample index list.
struct FitSplit {
  std::vector<std::size_t> fit;
  std::vector<std::size_t> validation;
};
FitSplit split_fit_validation(std::span<const std::size_t> rows, double fit_fraction = 0.8);

struct BranchShape {
  std::size_t channels = 1;
  std::size_t width = 1;
};

/// One conv + batch-norm branch per input, concatenated into a ReLU dense
/// layer and a 2-way output layer (index 0 = Down, 1 = Up).
class MbcnnNet {
 public:
  MbcnnNet() = default;
  MbcnnNet(std::vector<BranchShape> shapes, const MbcnnHyper& hyper);

  /// Glorot-uniform weights, or all zeros when `rng` is null.
  void initialize(Rng* rng);
  Tensor forward(const std::vector<Tensor>& inputs, nn::BatchNormMode mode);
  void backward(const Tensor& grad_logits);
  std::vector<nn::Parameter*> parameters();

  const std::vector<BranchShape>& shapes() const { return shapes_; }
  std::vector<nn::Conv1d>& convs() { return convs_; }
  std::vector<nn::BatchNorm>& norms() { return norms_; }
  nn::Dense& hidden() { return hidden_; }
  nn::Dense& head() { return head_; }

  void save(std::ostream& out);
  void load(std::istream& in);

 private:
  std::vector<BranchShape> shapes_;
  std::vector<nn::Conv1d> convs_;
  std::vector<nn::BatchNorm> norms_;
  std::vector<std::size_t> widths_;  // flattened conv output width per branch
  nn::Dense hidden_{"hidden", 1, 1, nn::Activation::ReLU};
  nn::Dense head_{"head", 1, 2, nn::Activation::Identity};
  std::size_t batch_ = 0;
};

struct MbcnnModel {
  MbcnnHyper hyper;
  std::vector<Standardizer> scalers;  // per branch
  MbcnnNet net;
  double training_accuracy = 0.0;
  double validation_accuracy = 0.0;
};

/// inputs: one [N, channels, width] tensor per branch; labels 0 = Down, 1 = Up.
MbcnnModel train_mbcnn(const std::vector<Tensor>& inputs, std::span<const int> labels,
                       std::span<const std::size_t> fit_rows, std::span<const std::size_t> validation_rows,
                       const MbcnnHyper& hyper, std::uint64_t seed);

std::vector<ProbabilityPair> predict_mbcnn(MbcnnModel& model, const std::vector<Tensor>& inputs);

/// Untrained model with zero weights and identity scalers.
MbcnnModel zero_mbcnn(std::vector<BranchShape> shapes, const MbcnnHyper& hyper);

struct ScMbcnnModel {
  spectral::Clustering clustering;
  /// Column indices of each branch; branches ordered by their first
  /// industry name, members sorted by name.
  std::vector<std::vector<std::size_t>> members;
  std::vector<std::string> names;  // industry names in the layout used at training
  MbcnnModel network;
};

/// industry: [N, lag, n] tensor. Clusters the industries on their lag-0
/// returns over `cluster_rows`, then trains an MBCNN with one branch per cluster.
ScMbcnnModel train_sc_mbcnn(const Tensor& industry, std::span<const std::string> names, std::span<const int> labels,
                            std::span<const std::size_t> cluster_rows, std::span<const std::size_t> fit_rows,
                            std::span<const std::size_t> validation_rows, const ScMbcnnHyper& hyper,
                            std::uint64_t seed);

std::vector<Tensor> cluster_branches(const Tensor& industry, const std::vector<std::vector<std::size_t>>& members);

std::vector<ProbabilityPair> predict_sc_mbcnn(ScMbcnnModel& model, const Tensor& industry);

/// Two-layer tanh RNN over [N, T, S] followed by a 2-way output layer.
class RnnNet {
 public:
  RnnNet() = default;
  RnnNet(std::size_t input, std::size_t hidden1, std::size_t hidden2);

  void initialize(Rng* rng);
  Tensor forward(const Tensor& x);
  void backward(const Tensor& grad_logits);
  std::vector<nn::Parameter*> parameters();

  nn::Rnn2& rnn() { return rnn_; }
  nn::Dense& head() { return head_; }

  void save(std::ostream& out);
  void load(std::istream& in);

 private:
  nn::Rnn2 rnn_{"rnn", 1, 1, 1};
  nn::Dense head_{"head", 1, 2, nn::Activation::Identity};
};

struct ProviderClassifier {
  std::string provider;
  ProviderHyper hyper;
  Standardizer scaler;
  RnnNet net;
  double validation_accuracy = 0.0;
  double reliability = 0.5;
};

/// sequence: [N, T, 10] market + sentiment features, oldest step first.
ProviderClassifier train_provider_classifier(const std::string& provider, const Tensor& sequence,
                                             std::span<const int> labels, std::span<const std::size_t> fit_rows,
                                             std::span<const std::size_t> validation_rows,
                                             const ProviderHyper& hyper, std::size_t batch_size, std::uint64_t seed);

std::vector<ProbabilityPair> predict_provider(ProviderClassifier& model, const Tensor& sequence);

struct RnnErModel {
  std::vector<ProviderClassifier> providers;
  std::vector<double> weights;  // normalized importance weights
  double validation_accuracy = 0.0;
};

RnnErModel train_rnn_er(std::span<const std::string> providers, const std::vector<Tensor>& sequences,
                        std::span<const int> labels, std::span<const std::size_t> fit_rows,
                        std::span<const std::size_t> validation_rows, const RnnErHyper& hyper, std::uint64_t seed);

std::vector<ProbabilityPair> predict_rnn_er(RnnErModel& model, const std::vector<Tensor>& sequences);

// Inputs assembled from a sample matrix.

/// One [N, lag, symbols] tensor per global branch.
std::vector<Tensor> global_inputs(const data::SampleMatrix& samples);
/// [N, lag, industries].
Tensor industry_input(const data::SampleMatrix& samples);
/// One [N, T, 10] tensor per provider, oldest day first. Market and sentiment
/// lags must agree.
std::vector<Tensor> provider_inputs(const data::SampleMatrix& samples);
std::vector<int> label_vector(const data::SampleMatrix& samples);

double accuracy(std::span<const ProbabilityPair> predictions, std::span<const int> labels,
                std::span<const std::size_t> rows);

}  // namespace tdse::extract
