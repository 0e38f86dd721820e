#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tdse/nn.hpp"

namespace tdse::meta {

/// Listed in selection-priority order.
enum class Kind { LR, KNN, RbfSvm, PolySvm, RF, ET, ANN };

inline constexpr std::array<Kind, 7> kAllKinds = {Kind::LR,  Kind::KNN, Kind::RbfSvm, Kind::PolySvm,
                                                  Kind::RF,  Kind::ET,  Kind::ANN};

const char* to_string(Kind kind);
Kind parse_kind(std::string_view text);

using Row = std::vector<double>;
using Rows = std::vector<Row>;

/// Fitted second-level model. label(x) is Up exactly when score(x) > 0.5.
class MetaModel {
 public:
  virtual ~MetaModel() = default;
  virtual Kind kind() const = 0;
  /// Up-probability style score in [0, 1].
  virtual double score(std::span<const double> x) const = 0;
  int label(std::span<const double> x) const { return score(x) > 0.5 ? 1 : 0; }
  /// Checkpoint-format dump of the fitted state.
  virtual void save(std::ostream& out) const = 0;
};

using ModelPtr = std::shared_ptr<const MetaModel>;

struct Predictions {
  std::vector<int> labels;
  std::vector<double> scores;
};

Predictions predict(const MetaModel& model, const Rows& X);

// ------------------------------------------------------------------ LR

class LogisticModel final : public MetaModel {
 public:
  Kind kind() const override { return Kind::LR; }
  double score(std::span<const double> x) const override;
  void save(std::ostream& out) const override;

  std::vector<double> weights;
  double intercept = 0.0;
  std::size_t iterations = 0;
};

/// Penalized log-likelihood sum_i log p(y_i) - ||w||^2 / (2C); intercept unpenalized.
double logistic_objective(const Rows& X, std::span<const int> y, std::span<const double> w, double b, double C);

/// Gradient ascent with step 1/L (L the gradient's Lipschitz bound) until the
/// gradient norm drops below 1e-6 or 10^4 iterations.
std::shared_ptr<LogisticModel> fit_logistic(const Rows& X, std::span<const int> y, double C);

// ----------------------------------------------------------------- KNN

class KnnModel final : public MetaModel {
 public:
  Kind kind() const override { return Kind::KNN; }
  double score(std::span<const double> x) const override;
  void save(std::ostream& out) const override;

  /// Indices of the k nearest training rows; equal distances keep the
  /// earlier index first.
  std::vector<std::size_t> neighbors(std::span<const double> x) const;

  Rows X;
  std::vector<int> y;
  std::size_t k = 1;
};

std::shared_ptr<KnnModel> fit_knn(const Rows& X, std::span<const int> y, std::size_t k);

// ----------------------------------------------------------------- SVM

enum class KernelType { Rbf, Poly };

struct SvmKernel {
  KernelType type = KernelType::Rbf;
  double gamma = 1.0;   // Rbf: exp(-gamma * |x - z|^2)
  int degree = 2;       // Poly: (x.z / d + 1)^degree, d = feature count
  double operator()(std::span<const double> a, std::span<const double> b) const;
};

class SvmModel final : public MetaModel {
 public:
  Kind kind() const override { return kernel.type == KernelType::Rbf ? Kind::RbfSvm : Kind::PolySvm; }
  double score(std::span<const double> x) const override;
  void save(std::ostream& out) const override;

  double decision(std::span<const double> x) const;

  SvmKernel kernel;
  double C = 1.0;
  Rows support;                 // rows with alpha > 0
  std::vector<double> coef;     // alpha_i * y_i for each support row
  double bias = 0.0;
  std::vector<double> alpha;    // all training alphas, canonical row order
  double dual_objective = 0.0;
  std::size_t iterations = 0;
};

/// Soft-margin dual objective sum(alpha) - 1/2 sum_ij a_i a_j y_i y_j K_ij with y in {-1, +1}.
double svm_dual_objective(const Rows& X, std::span<const int> y, std::span<const double> alpha,
                          const SvmKernel& kernel);

/// SMO with maximal-violating-pair selection until the KKT gap is below
/// `tolerance`; NoConvergence after `max_iterations` pair updates.
std::shared_ptr<SvmModel> fit_svm(const Rows& X, std::span<const int> y, const SvmKernel& kernel, double C,
                                  double tolerance = 1e-3, std::size_t max_iterations = 10'000'000);

// -------------------------------------------------------------- forests

enum class ForestVariant { RF, ET };

struct TreeNode {
  int feature = -1;         // -1 for a leaf
  double threshold = 0.0;   // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  int label = 0;            // leaf majority, ties Down
};

struct Tree {
  std::vector<TreeNode> nodes;  // root at 0
  int predict(std::span<const double> x) const;
};

class ForestModel final : public MetaModel {
 public:
  Kind kind() const override { return variant == ForestVariant::RF ? Kind::RF : Kind::ET; }
  double score(std::span<const double> x) const override;
  void save(std::ostream& out) const override;

  std::vector<int> votes(std::span<const double> x) const;

  ForestVariant variant = ForestVariant::RF;
  std::vector<Tree> trees;
  /// Out-of-bag accuracy (RF only; NaN when no sample is out of bag).
  double oob_accuracy = 0.0;
};

/// RF: bootstrap rows, best Gini midpoint split over sqrt(d) random features.
/// ET: all rows, one uniform random threshold per sampled feature, best Gini
/// among those. Trees grow until leaves are pure or unsplittable.
std::shared_ptr<ForestModel> fit_forest(const Rows& X, std::span<const int> y, std::size_t n_trees,
                                        ForestVariant variant, std::uint64_t seed);

double gini(std::size_t up, std::size_t total);

// ----------------------------------------------------------------- ANN

struct MlpConfig {
  std::array<std::size_t, 3> widths = {10, 10, 10};
  std::size_t epochs = 100;
  double learning_rate = 1e-2;
  std::size_t batch_size = 32;
};

/// Three ReLU hidden layers and a 2-way softmax output.
class MlpNet {
 public:
  MlpNet(std::size_t inputs, const std::array<std::size_t, 3>& widths);

  void initialize(Rng& rng);
  nn::Tensor forward(const nn::Tensor& x);
  void backward(const nn::Tensor& grad_logits);
  std::vector<nn::Parameter*> parameters();
  /// Cache-free forward of one row, returns logits.
  std::vector<double> logits(std::span<const double> x) const;

 private:
  std::vector<nn::Dense> layers_;
};

class MlpModel final : public MetaModel {
 public:
  explicit MlpModel(MlpNet net) : net(std::move(net)) {}
  Kind kind() const override { return Kind::ANN; }
  double score(std::span<const double> x) const override;
  void save(std::ostream& out) const override;

  MlpNet net;
  std::array<std::size_t, 3> widths{};
};

std::shared_ptr<MlpModel> fit_mlp(const Rows& X, std::span<const int> y, const MlpConfig& config,
                                  std::uint64_t seed);

// -------------------------------------------------------- hyper-params

/// The eleven Stage-2 hyper-parameters.
struct MetaHyper {
  double lr_C = 1.0;
  std::size_t knn_k = 5;
  double rbf_C = 1.0;
  double rbf_gamma = 1.0;
  double poly_C = 1.0;
  int poly_degree = 2;
  std::size_t rf_trees = 10;
  std::size_t et_trees = 10;
  std::array<std::size_t, 3> ann_widths = {10, 10, 10};

  friend bool operator==(const MetaHyper&, const MetaHyper&) = default;
};

/// Fits one kind with its share of `hyper`. KNN's k is capped at the row count.
ModelPtr fit_kind(Kind kind, const Rows& X, std::span<const int> y, const MetaHyper& hyper, std::uint64_t seed);

/// Text key for caching fits of the same kind and hyper-parameters.
std::string hyper_key(Kind kind, const MetaHyper& hyper);

}  // namespace tdse::meta
