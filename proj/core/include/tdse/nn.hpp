#pragma once

#include <cstddef>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tdse/rng.hpp"
#include "tdse/tensor.hpp"

namespace tdse::nn {

enum class Activation { ReLU, Identity, Tanh };

double activate(Activation a, double x);

/// Valid 1-D convolution (stride 1) followed by ReLU:
/// out[j] = max(0, sum_k kernel[k] * x[j + k]).
std::vector<double> conv1d_forward(std::span<const double> x, std::span<const double> kernel);

enum class BatchNormMode { Train, Infer };

/// Running statistics used at inference. `momentum` is the weight kept on the
/// old value at each training step.
struct BatchNormState {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.9;
  double epsilon = 1e-5;

  static BatchNormState fresh(std::size_t features, double momentum = 0.9, double epsilon = 1e-5);
};

/// batch: [rows, features]. Train mode standardizes each feature with batch
/// statistics (biased variance) and updates `state`; Infer uses `state`.
Tensor batchnorm_forward(const Tensor& batch, std::span<const double> gamma, std::span<const double> beta,
                         BatchNormMode mode, BatchNormState& state);

/// out[i] = act(sum_k weights[k][i] * x[k] + bias[i]); weights: [in, out].
std::vector<double> dense_forward(std::span<const double> x, const Tensor& weights, std::span<const double> bias,
                                  Activation activation);

/// Two stacked tanh recurrent layers.
///   h1 = tanh(U x + W1 h1_prev + b1),  h2 = tanh(V h1 + W2 h2_prev + b2)
/// U: [h1, s], W1: [h1, h1], V: [h2, h1], W2: [h2, h2].
struct RnnParams {
  Tensor U;
  Tensor W1;
  Tensor b1;
  Tensor V;
  Tensor W2;
  Tensor b2;

  std::size_t input_size() const { return U.dim(1); }
  std::size_t hidden1() const { return U.dim(0); }
  std::size_t hidden2() const { return V.dim(0); }
};

/// Returns the last hidden state of layer 2; both layers start from zero.
std::vector<double> rnn_forward(const std::vector<std::vector<double>>& sequence, const RnnParams& params);

/// Max-shifted softmax.
std::vector<double> softmax(std::span<const double> logits);

/// Mean cross-entropy of a [rows, classes] logit batch; writes d(loss)/d(logits)
/// into `grad` when non-null.
double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels, Tensor* grad);

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool decay = true;  // receives L2 penalty

  Parameter() = default;
  Parameter(std::string n, std::vector<std::size_t> shape, bool decays = true)
      : name(std::move(n)), value(shape), grad(std::move(shape)), decay(decays) {}
  void zero_grad() { grad.fill(0.0); }
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::size_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

/// Bias-corrected Adam update of every tensor in `params` by its gradient.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, AdamState& state);
void adam_step(std::span<Parameter* const> params, AdamState& state);

// Batch layers used by the extractors and the ANN meta-classifier. Each
// forward caches what its backward needs; backward accumulates parameter
// gradients and returns the gradient with respect to the input.

/// [B, C, W] -> [B, F, W - K + 1], ReLU. No bias (batch norm follows).
class Conv1d {
 public:
  Conv1d(std::string name, std::size_t channels, std::size_t filters, std::size_t kernel);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  std::vector<Parameter*> parameters() { return {&kernel_}; }

  Parameter& kernel() { return kernel_; }
  std::size_t output_width(std::size_t input_width) const { return input_width - kernel_.value.dim(2) + 1; }

 private:
  Parameter kernel_;  // [F, C, K]
  Tensor input_;
  Tensor pre_;
};

/// [B, D] per-feature normalization with learned scale and shift.
class BatchNorm {
 public:
  BatchNorm(std::string name, std::size_t features, double momentum = 0.9, double epsilon = 1e-5);

  Tensor forward(const Tensor& x, BatchNormMode mode);
  Tensor backward(const Tensor& grad_out);
  std::vector<Parameter*> parameters() { return {&gamma_, &beta_}; }

  Parameter& gamma() { return gamma_; }
  Parameter& beta() { return beta_; }
  BatchNormState& state() { return state_; }
  const BatchNormState& state() const { return state_; }

 private:
  Parameter gamma_;
  Parameter beta_;
  BatchNormState state_;
  BatchNormMode mode_ = BatchNormMode::Infer;
  Tensor xhat_;
  std::vector<double> inv_std_;
};

/// [B, In] -> [B, Out].
class Dense {
 public:
  Dense(std::string name, std::size_t in, std::size_t out, Activation activation);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  std::vector<Parameter*> parameters() { return {&weights_, &bias_}; }

  Parameter& weights() { return weights_; }
  Parameter& bias() { return bias_; }
  const Parameter& weights() const { return weights_; }
  const Parameter& bias() const { return bias_; }
  Activation activation() const { return activation_; }

 private:
  Parameter weights_;  // [In, Out]
  Parameter bias_;     // [Out]
  Activation activation_;
  Tensor input_;
  Tensor pre_;
};

/// [B, T, S] -> [B, H2], two tanh layers unrolled over T steps.
class Rnn2 {
 public:
  Rnn2(std::string name, std::size_t input, std::size_t hidden1, std::size_t hidden2);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);
  std::vector<Parameter*> parameters() { return {&U_, &W1_, &b1_, &V_, &W2_, &b2_}; }

  /// Copy of the current weights in the free-function layout.
  RnnParams params() const;

  Parameter& U() { return U_; }
  Parameter& W1() { return W1_; }
  Parameter& b1() { return b1_; }
  Parameter& V() { return V_; }
  Parameter& W2() { return W2_; }
  Parameter& b2() { return b2_; }

 private:
  Parameter U_, W1_, b1_, V_, W2_, b2_;
  Tensor input_;
  std::vector<Tensor> h1_;  // T + 1 states, [B, H1]; index 0 is zero
  std::vector<Tensor> h2_;
};

struct NamedTensor {
  std::string name;
  Tensor* tensor = nullptr;
};

/// Text checkpoint: header line, tensor count, then per tensor a
/// `name rank dims...` line followed by the values (shortest round-trip form).
void save_checkpoint(std::ostream& out, std::span<const NamedTensor> tensors);
/// Loads into tensors with matching names and shapes; throws ShapeMismatch
/// or MalformedRow otherwise.
void load_checkpoint(std::istream& in, std::span<const NamedTensor> tensors);

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

/// Compares each parameter's `grad` (filled by the caller's backward pass)
/// with central differences of `loss` using step h.
/// relative error = |a - n| / max(|a|, |n|, floor).
GradientCheck check_gradients(std::span<Parameter* const> params, const std::function<double()>& loss,
                              double h = 1e-5, double floor = 1e-6);

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  AdamConfig adam;
  double l2 = 0.0;
  /// Smallest allowed mini-batch; a shorter tail batch is merged into the
  /// previous one. Nets with batch norm need 2.
  std::size_t min_batch = 1;
};

/// Mini-batch Adam on softmax cross-entropy. `forward(rows)` returns logits
/// for the given sample indices in training mode; `backward(grad)` consumes
/// d(loss)/d(logits). Returns the mean loss of the last epoch.
double train_classifier(std::span<Parameter* const> params, std::span<const int> labels, const TrainConfig& config,
                        Rng& rng, const std::function<Tensor(std::span<const std::size_t>)>& forward,
                        const std::function<void(const Tensor&)>& backward);

}  // namespace tdse::nn
