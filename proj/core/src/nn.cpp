#include "tdse/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tdse/csv.hpp"
#include "tdse/error.hpp"

namespace tdse::nn {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}

double activation_grad(Activation a, double pre) {
  switch (a) {
    case Activation::ReLU:
      return pre > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: {
      const double t = std::tanh(pre);
      return 1.0 - t * t;
    }
    case Activation::Identity:
      break;
  }
  return 1.0;
}

constexpr const char* kCheckpointHeader = "tdse-checkpoint 1";

}  // namespace

double activate(Activation a, double x) {
  switch (a) {
    case Activation::ReLU:
      return x > 0.0 ? x : 0.0;
    case Activation::Tanh:
      return std::tanh(x);
    case Activation::Identity:
      break;
  }
  return x;
}

std::vector<double> conv1d_forward(std::span<const double> x, std::span<const double> kernel) {
  if (kernel.empty() || kernel.size() > x.size()) {
    throw Error(ErrorCode::KernelTooLong, "kernel length " + std::to_string(kernel.size()) + " exceeds input length " +
                                              std::to_string(x.size()));
  }
  std::vector<double> out(x.size() - kernel.size() + 1);
  for (std::size_t j = 0; j < out.size(); ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < kernel.size(); ++k) s += kernel[k] * x[j + k];
    out[j] = s > 0.0 ? s : 0.0;
  }
  return out;
}

BatchNormState BatchNormState::fresh(std::size_t features, double momentum, double epsilon) {
  BatchNormState s;
  s.running_mean.assign(features, 0.0);
  s.running_var.assign(features, 1.0);
  s.momentum = momentum;
  s.epsilon = epsilon;
  return s;
}

Tensor batchnorm_forward(const Tensor& batch, std::span<const double> gamma, std::span<const double> beta,
                         BatchNormMode mode, BatchNormState& state) {
  require(batch.rank() == 2, "batch norm expects a matrix, got " + shape_string(batch.shape()));
  const std::size_t rows = batch.dim(0);
  const std::size_t cols = batch.dim(1);
  require(gamma.size() == cols && beta.size() == cols, "batch norm gamma/beta width mismatch");
  if (state.running_mean.empty()) state = BatchNormState::fresh(cols, state.momentum, state.epsilon);
  require(state.running_mean.size() == cols && state.running_var.size() == cols,
          "batch norm running statistics width mismatch");
  if (mode == BatchNormMode::Train && rows < 2) {
    throw Error(ErrorCode::DegenerateBatch, "batch norm training needs at least 2 rows, got " + std::to_string(rows));
  }
  Tensor out(batch.shape());
  for (std::size_t c = 0; c < cols; ++c) {
    double mean = state.running_mean[c];
    double var = state.running_var[c];
    if (mode == BatchNormMode::Train) {
      mean = 0.0;
      for (std::size_t r = 0; r < rows; ++r) mean += batch.at(r, c);
      mean /= static_cast<double>(rows);
      var = 0.0;
      for (std::size_t r = 0; r < rows; ++r) var += (batch.at(r, c) - mean) * (batch.at(r, c) - mean);
      var /= static_cast<double>(rows);
      state.running_mean[c] = state.momentum * state.running_mean[c] + (1.0 - state.momentum) * mean;
      state.running_var[c] = state.momentum * state.running_var[c] + (1.0 - state.momentum) * var;
    }
    const double inv = 1.0 / std::sqrt(var + state.epsilon);
    for (std::size_t r = 0; r < rows; ++r) out.at(r, c) = gamma[c] * (batch.at(r, c) - mean) * inv + beta[c];
  }
  return out;
}

std::vector<double> dense_forward(std::span<const double> x, const Tensor& weights, std::span<const double> bias,
                                  Activation activation) {
  require(weights.rank() == 2 && weights.dim(0) == x.size() && weights.dim(1) == bias.size(),
          "dense: input " + std::to_string(x.size()) + ", weights " + shape_string(weights.shape()) + ", bias " +
              std::to_string(bias.size()));
  std::vector<double> out(bias.begin(), bias.end());
  for (std::size_t k = 0; k < x.size(); ++k) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += weights.at(k, i) * x[k];
  }
  for (auto& v : out) v = activate(activation, v);
  return out;
}

std::vector<double> rnn_forward(const std::vector<std::vector<double>>& sequence, const RnnParams& p) {
  if (sequence.empty()) throw Error(ErrorCode::EmptySequence, "recurrent input sequence is empty");
  const std::size_t s = p.input_size(), n1 = p.hidden1(), n2 = p.hidden2();
  require(p.W1.size() == n1 * n1 && p.b1.size() == n1 && p.V.dim(1) == n1 && p.W2.size() == n2 * n2 &&
              p.b2.size() == n2,
          "recurrent parameter shapes are inconsistent");
  std::vector<double> h1(n1, 0.0), h2(n2, 0.0), a1(n1), a2(n2);
  for (const auto& x : sequence) {
    require(x.size() == s, "recurrent step has " + std::to_string(x.size()) + " inputs, expected " +
                               std::to_string(s));
    for (std::size_t i = 0; i < n1; ++i) {
      double v = p.b1[i];
      for (std::size_t k = 0; k < s; ++k) v += p.U.at(i, k) * x[k];
      for (std::size_t k = 0; k < n1; ++k) v += p.W1.at(i, k) * h1[k];
      a1[i] = std::tanh(v);
    }
    h1 = a1;
    for (std::size_t i = 0; i < n2; ++i) {
      double v = p.b2[i];
      for (std::size_t k = 0; k < n1; ++k) v += p.V.at(i, k) * h1[k];
      for (std::size_t k = 0; k < n2; ++k) v += p.W2.at(i, k) * h2[k];
      a2[i] = std::tanh(v);
    }
    h2 = a2;
  }
  return h2;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) z += (p[i] = std::exp(logits[i] - m));
  for (auto& v : p) v /= z;
  return p;
}

double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels, Tensor* grad) {
  require(logits.rank() == 2 && logits.dim(0) == labels.size(), "cross-entropy: logits/labels mismatch");
  const std::size_t rows = logits.dim(0), classes = logits.dim(1);
  if (grad) *grad = Tensor(logits.shape());
  double loss = 0.0;
  const double scale = rows ? 1.0 / static_cast<double>(rows) : 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = logits.values().subspan(r * classes, classes);
    const double m = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - m);
    const auto y = static_cast<std::size_t>(labels[r]);
    require(y < classes, "cross-entropy: label out of range");
    loss += (std::log(z) + m - row[y]) * scale;
    if (grad) {
      for (std::size_t c = 0; c < classes; ++c) {
        grad->at(r, c) = (std::exp(row[c] - m) / z - (c == y ? 1.0 : 0.0)) * scale;
      }
    }
  }
  return loss;
}

void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(fan_in + fan_out, 1)));
  for (auto& v : t.values()) v = rng.uniform(-limit, limit);
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, AdamState& state) {
  require(params.size() == grads.size(), "adam: parameter and gradient counts differ");
  if (state.first_moment.empty()) {
    for (const Tensor* p : params) {
      state.first_moment.emplace_back(p->shape());
      state.second_moment.emplace_back(p->shape());
    }
  }
  require(state.first_moment.size() == params.size(), "adam: state does not match parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(params[i]->same_shape(*grads[i]) && params[i]->same_shape(state.first_moment[i]),
            "adam: shape mismatch for parameter " + std::to_string(i));
  }
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(c.beta1, t);
  const double c2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->values();
    const auto g = grads[i]->values();
    auto m = state.first_moment[i].values();
    auto v = state.second_moment[i].values();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      p[j] -= c.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + c.epsilon);
    }
  }
}

void adam_step(std::span<Parameter* const> params, AdamState& state) {
  std::vector<Tensor*> values;
  std::vector<const Tensor*> grads;
  for (Parameter* p : params) {
    values.push_back(&p->value);
    grads.push_back(&p->grad);
  }
  adam_step(values, grads, state);
}

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(std::string name, std::size_t channels, std::size_t filters, std::size_t kernel)
    : kernel_(std::move(name) + ".kernel", {filters, channels, kernel}) {}

Tensor Conv1d::forward(const Tensor& x) {
  const std::size_t F = kernel_.value.dim(0), C = kernel_.value.dim(1), K = kernel_.value.dim(2);
  require(x.rank() == 3 && x.dim(1) == C, "conv1d: input " + shape_string(x.shape()) + " for " + std::to_string(C) +
                                              " channels");
  const std::size_t B = x.dim(0), W = x.dim(2);
  if (K > W) {
    throw Error(ErrorCode::KernelTooLong,
                "kernel length " + std::to_string(K) + " exceeds input length " + std::to_string(W));
  }
  const std::size_t O = W - K + 1;
  input_ = x;
  pre_ = Tensor({B, F, O});
  Tensor out({B, F, O});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t j = 0; j < O; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t k = 0; k < K; ++k) s += kernel_.value.at(f, c, k) * x.at(b, c, j + k);
        }
        pre_.at(b, f, j) = s;
        out.at(b, f, j) = s > 0.0 ? s : 0.0;
      }
    }
  }
  return out;
}

Tensor Conv1d::backward(const Tensor& grad_out) {
  require(grad_out.same_shape(pre_), "conv1d backward: gradient shape mismatch");
  const std::size_t F = kernel_.value.dim(0), C = kernel_.value.dim(1), K = kernel_.value.dim(2);
  const std::size_t B = input_.dim(0), O = pre_.dim(2);
  Tensor grad_in(input_.shape());
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t f = 0; f < F; ++f) {
      for (std::size_t j = 0; j < O; ++j) {
        if (pre_.at(b, f, j) <= 0.0) continue;
        const double g = grad_out.at(b, f, j);
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t k = 0; k < K; ++k) {
            kernel_.grad.at(f, c, k) += g * input_.at(b, c, j + k);
            grad_in.at(b, c, j + k) += g * kernel_.value.at(f, c, k);
          }
        }
      }
    }
  }
  return grad_in;
}

// ------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(std::string name, std::size_t features, double momentum, double epsilon)
    : gamma_(name + ".gamma", {features}, false),
      beta_(name + ".beta", {features}, false),
      state_(BatchNormState::fresh(features, momentum, epsilon)) {
  gamma_.value.fill(1.0);
}

Tensor BatchNorm::forward(const Tensor& x, BatchNormMode mode) {
  mode_ = mode;
  Tensor out = batchnorm_forward(x, gamma_.value.values(), beta_.value.values(), mode, state_);
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  xhat_ = Tensor(x.shape());
  inv_std_.assign(cols, 0.0);
  for (std::size_t c = 0; c < cols; ++c) {
    double mean = state_.running_mean[c], var = state_.running_var[c];
    if (mode == BatchNormMode::Train) {
      mean = 0.0;
      for (std::size_t r = 0; r < rows; ++r) mean += x.at(r, c);
      mean /= static_cast<double>(rows);
      var = 0.0;
      for (std::size_t r = 0; r < rows; ++r) var += (x.at(r, c) - mean) * (x.at(r, c) - mean);
      var /= static_cast<double>(rows);
    }
    inv_std_[c] = 1.0 / std::sqrt(var + state_.epsilon);
    for (std::size_t r = 0; r < rows; ++r) xhat_.at(r, c) = (x.at(r, c) - mean) * inv_std_[c];
  }
  return out;
}

Tensor BatchNorm::backward(const Tensor& grad_out) {
  require(grad_out.same_shape(xhat_), "batch norm backward: gradient shape mismatch");
  const std::size_t rows = xhat_.dim(0), cols = xhat_.dim(1);
  const double n = static_cast<double>(rows);
  Tensor grad_in(xhat_.shape());
  for (std::size_t c = 0; c < cols; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      sum_g += grad_out.at(r, c);
      sum_gx += grad_out.at(r, c) * xhat_.at(r, c);
    }
    gamma_.grad[c] += sum_gx;
    beta_.grad[c] += sum_g;
    const double g = gamma_.value[c];
    for (std::size_t r = 0; r < rows; ++r) {
      if (mode_ == BatchNormMode::Train) {
        grad_in.at(r, c) = g * inv_std_[c] / n * (n * grad_out.at(r, c) - sum_g - xhat_.at(r, c) * sum_gx);
      } else {
        grad_in.at(r, c) = g * inv_std_[c] * grad_out.at(r, c);
      }
    }
  }
  return grad_in;
}

// ----------------------------------------------------------------- Dense

Dense::Dense(std::string name, std::size_t in, std::size_t out, Activation activation)
    : weights_(name + ".weights", {in, out}), bias_(name + ".bias", {out}, false), activation_(activation) {}

Tensor Dense::forward(const Tensor& x) {
  const std::size_t In = weights_.value.dim(0), Out = weights_.value.dim(1);
  require(x.rank() == 2 && x.dim(1) == In, "dense: input " + shape_string(x.shape()) + " for weights " +
                                               shape_string(weights_.value.shape()));
  const std::size_t B = x.dim(0);
  input_ = x;
  pre_ = Tensor({B, Out});
  Tensor out({B, Out});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < Out; ++i) pre_.at(b, i) = bias_.value[i];
    for (std::size_t k = 0; k < In; ++k) {
      const double xv = x.at(b, k);
      if (xv == 0.0) continue;
      for (std::size_t i = 0; i < Out; ++i) pre_.at(b, i) += weights_.value.at(k, i) * xv;
    }
    for (std::size_t i = 0; i < Out; ++i) out.at(b, i) = activate(activation_, pre_.at(b, i));
  }
  return out;
}

Tensor Dense::backward(const Tensor& grad_out) {
  require(grad_out.same_shape(pre_), "dense backward: gradient shape mismatch");
  const std::size_t In = weights_.value.dim(0), Out = weights_.value.dim(1), B = input_.dim(0);
  Tensor grad_in(input_.shape());
  std::vector<double> da(Out);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < Out; ++i) {
      da[i] = grad_out.at(b, i) * activation_grad(activation_, pre_.at(b, i));
      bias_.grad[i] += da[i];
    }
    for (std::size_t k = 0; k < In; ++k) {
      const double xv = input_.at(b, k);
      double s = 0.0;
      for (std::size_t i = 0; i < Out; ++i) {
        weights_.grad.at(k, i) += da[i] * xv;
        s += weights_.value.at(k, i) * da[i];
      }
      grad_in.at(b, k) = s;
    }
  }
  return grad_in;
}

// ------------------------------------------------------------------ Rnn2

Rnn2::Rnn2(std::string name, std::size_t input, std::size_t hidden1, std::size_t hidden2)
    : U_(name + ".U", {hidden1, input}),
      W1_(name + ".W1", {hidden1, hidden1}),
      b1_(name + ".b1", {hidden1}, false),
      V_(name + ".V", {hidden2, hidden1}),
      W2_(name + ".W2", {hidden2, hidden2}),
      b2_(name + ".b2", {hidden2}, false) {}

RnnParams Rnn2::params() const { return {U_.value, W1_.value, b1_.value, V_.value, W2_.value, b2_.value}; }

Tensor Rnn2::forward(const Tensor& x) {
  const std::size_t S = U_.value.dim(1), H1 = U_.value.dim(0), H2 = V_.value.dim(0);
  require(x.rank() == 3 && x.dim(2) == S, "rnn: input " + shape_string(x.shape()) + " for " + std::to_string(S) +
                                              " features");
  const std::size_t B = x.dim(0), T = x.dim(1);
  if (T == 0) throw Error(ErrorCode::EmptySequence, "recurrent input sequence is empty");
  input_ = x;
  h1_.assign(T + 1, Tensor({B, H1}));
  h2_.assign(T + 1, Tensor({B, H2}));
  for (std::size_t t = 1; t <= T; ++t) {
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t i = 0; i < H1; ++i) {
        double v = b1_.value[i];
        for (std::size_t k = 0; k < S; ++k) v += U_.value.at(i, k) * x.at(b, t - 1, k);
        for (std::size_t k = 0; k < H1; ++k) v += W1_.value.at(i, k) * h1_[t - 1].at(b, k);
        h1_[t].at(b, i) = std::tanh(v);
      }
      for (std::size_t i = 0; i < H2; ++i) {
        double v = b2_.value[i];
        for (std::size_t k = 0; k < H1; ++k) v += V_.value.at(i, k) * h1_[t].at(b, k);
        for (std::size_t k = 0; k < H2; ++k) v += W2_.value.at(i, k) * h2_[t - 1].at(b, k);
        h2_[t].at(b, i) = std::tanh(v);
      }
    }
  }
  return h2_[T];
}

Tensor Rnn2::backward(const Tensor& grad_out) {
  const std::size_t T = h1_.size() - 1;
  require(T > 0 && grad_out.same_shape(h2_[T]), "rnn backward: gradient shape mismatch");
  const std::size_t S = U_.value.dim(1), H1 = U_.value.dim(0), H2 = V_.value.dim(0), B = input_.dim(0);
  Tensor grad_in(input_.shape());
  std::vector<double> dh2(H2), dh1c(H1), da2(H2), da1(H1);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < H2; ++i) dh2[i] = grad_out.at(b, i);
    std::fill(dh1c.begin(), dh1c.end(), 0.0);
    for (std::size_t t = T; t >= 1; --t) {
      for (std::size_t i = 0; i < H2; ++i) {
        const double h = h2_[t].at(b, i);
        da2[i] = dh2[i] * (1.0 - h * h);
        b2_.grad[i] += da2[i];
        for (std::size_t k = 0; k < H1; ++k) V_.grad.at(i, k) += da2[i] * h1_[t].at(b, k);
        for (std::size_t k = 0; k < H2; ++k) W2_.grad.at(i, k) += da2[i] * h2_[t - 1].at(b, k);
      }
      for (std::size_t k = 0; k < H1; ++k) {
        double s = dh1c[k];
        for (std::size_t i = 0; i < H2; ++i) s += V_.value.at(i, k) * da2[i];
        const double h = h1_[t].at(b, k);
        da1[k] = s * (1.0 - h * h);
      }
      for (std::size_t i = 0; i < H1; ++i) {
        b1_.grad[i] += da1[i];
        for (std::size_t k = 0; k < S; ++k) U_.grad.at(i, k) += da1[i] * input_.at(b, t - 1, k);
        for (std::size_t k = 0; k < H1; ++k) W1_.grad.at(i, k) += da1[i] * h1_[t - 1].at(b, k);
      }
      for (std::size_t k = 0; k < S; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < H1; ++i) s += U_.value.at(i, k) * da1[i];
        grad_in.at(b, t - 1, k) = s;
      }
      for (std::size_t k = 0; k < H1; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < H1; ++i) s += W1_.value.at(i, k) * da1[i];
        dh1c[k] = s;
      }
      for (std::size_t k = 0; k < H2; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < H2; ++i) s += W2_.value.at(i, k) * da2[i];
        dh2[k] = s;
      }
    }
  }
  return grad_in;
}

// ------------------------------------------------------------ checkpoint

void save_checkpoint(std::ostream& out, std::span<const NamedTensor> tensors) {
  out << kCheckpointHeader << '\n' << tensors.size() << '\n';
  for (const auto& nt : tensors) {
    out << nt.name << ' ' << nt.tensor->rank();
    for (auto d : nt.tensor->shape()) out << ' ' << d;
    out << '\n';
    const auto v = nt.tensor->values();
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << csv::format_double(v[i]);
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "failed to write checkpoint");
}

void load_checkpoint(std::istream& in, std::span<const NamedTensor> tensors) {
  std::string line;
  if (!csv::getline(in, line) || csv::trim(line) != kCheckpointHeader) {
    throw Error(ErrorCode::MalformedRow, "checkpoint: missing or unsupported header");
  }
  std::size_t count = 0;
  if (!(in >> count) || count != tensors.size()) {
    throw Error(ErrorCode::ShapeMismatch, "checkpoint: tensor count differs from model");
  }
  for (std::size_t t = 0; t < count; ++t) {
    std::string name;
    std::size_t rank = 0;
    if (!(in >> name >> rank)) throw Error(ErrorCode::MalformedRow, "checkpoint: truncated tensor header");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) {
      if (!(in >> d)) throw Error(ErrorCode::MalformedRow, "checkpoint: truncated shape of " + name);
    }
    const auto it = std::find_if(tensors.begin(), tensors.end(), [&](const NamedTensor& nt) { return nt.name == name; });
    if (it == tensors.end()) throw Error(ErrorCode::ShapeMismatch, "checkpoint: unknown tensor " + name);
    if (it->tensor->shape() != shape) {
      throw Error(ErrorCode::ShapeMismatch, "checkpoint: " + name + " has shape " + shape_string(shape) +
                                                ", model expects " + shape_string(it->tensor->shape()));
    }
    for (auto& v : it->tensor->values()) {
      std::string tok;
      if (!(in >> tok)) throw Error(ErrorCode::MalformedRow, "checkpoint: truncated values of " + name);
      v = csv::parse_double(tok, "checkpoint " + name);
    }
  }
}

// -------------------------------------------------------- gradient check

GradientCheck check_gradients(std::span<Parameter* const> params, const std::function<double()>& loss, double h,
                              double floor) {
  GradientCheck result;
  for (Parameter* p : params) {
    auto values = p->value.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = loss();
      values[i] = saved - h;
      const double down = loss();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p->grad[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic - numeric) / denom);
      ++result.checked;
    }
  }
  return result;
}

// --------------------------------------------------------------- trainer

double train_classifier(std::span<Parameter* const> params, std::span<const int> labels, const TrainConfig& config,
                        Rng& rng, const std::function<Tensor(std::span<const std::size_t>)>& forward,
                        const std::function<void(const Tensor&)>& backward) {
  const std::size_t n = labels.size();
  if (n < std::max<std::size_t>(config.min_batch, 1)) {
    throw Error(ErrorCode::TooFewSamples, "training needs at least " + std::to_string(config.min_batch) +
                                              " samples, got " + std::to_string(n));
  }
  const std::size_t batch = std::max<std::size_t>(config.batch_size, config.min_batch);
  AdamState adam;
  adam.config = config.adam;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<int> batch_labels;
  double epoch_loss = 0.0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (std::size_t s = 0; s < n; s += batch) spans.emplace_back(s, std::min(n, s + batch));
    if (spans.size() > 1 && spans.back().second - spans.back().first < config.min_batch) {
      spans[spans.size() - 2].second = n;
      spans.pop_back();
    }
    epoch_loss = 0.0;
    for (const auto& [b, e] : spans) {
      const std::span<const std::size_t> rows(order.data() + b, e - b);
      batch_labels.clear();
      for (auto r : rows) batch_labels.push_back(labels[r]);
      for (Parameter* p : params) p->zero_grad();
      const Tensor logits = forward(rows);
      Tensor grad;
      double loss = softmax_cross_entropy(logits, batch_labels, &grad);
      backward(grad);
      if (config.l2 > 0.0) {
        for (Parameter* p : params) {
          if (!p->decay) continue;
          auto v = p->value.values();
          auto g = p->grad.values();
          for (std::size_t i = 0; i < v.size(); ++i) {
            g[i] += config.l2 * v[i];
            loss += 0.5 * config.l2 * v[i] * v[i];
          }
        }
      }
      adam_step(params, adam);
      epoch_loss += loss * static_cast<double>(rows.size());
    }
    epoch_loss /= static_cast<double>(n);
  }
  return epoch_loss;
}

}  // namespace tdse::nn
