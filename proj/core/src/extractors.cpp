#include "tdse/extractors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>

#include "tdse/error.hpp"

namespace tdse::extract {

namespace {

std::atomic<std::uint64_t> g_training_calls{0};

void require_samples(std::span<const std::size_t> fit_rows, std::size_t minimum) {
  if (fit_rows.size() < minimum) {
    throw Error(ErrorCode::TooFewSamples, "extractor needs at least " + std::to_string(minimum) +
                                              " training samples, got " + std::to_string(fit_rows.size()));
  }
}

std::size_t positions(const Tensor& x) { return x.dim(0) == 0 ? 0 : x.size() / x.dim(0); }

std::vector<int> labels_of(std::span<const int> labels, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(labels[r]);
  return out;
}

std::vector<nn::NamedTensor> named(const std::vector<nn::Parameter*>& params) {
  std::vector<nn::NamedTensor> out;
  for (auto* p : params) out.push_back({p->name, &p->value});
  return out;
}

std::vector<ProbabilityPair> to_pairs(const Tensor& logits) {
  std::vector<ProbabilityPair> out(logits.dim(0));
  for (std::size_t r = 0; r < out.size(); ++r) {
    const double z[2] = {logits.at(r, 0), logits.at(r, 1)};
    const auto p = nn::softmax(z);
    out[r] = {p[1], p[0]};
  }
  return out;
}

std::size_t effective_kernel(std::size_t kernel, std::size_t width) { return std::max<std::size_t>(1, std::min(kernel, width)); }

}  // namespace

std::uint64_t training_calls() { return g_training_calls.load(); }

MbcnnHyper ScMbcnnHyper::network() const {
  MbcnnHyper h;
  h.kernel = kernel;
  h.filters = filters;
  h.dense_width = dense_width;
  h.epochs = epochs;
  h.learning_rate = learning_rate;
  h.batch_size = batch_size;
  return h;
}

Standardizer Standardizer::fit(const Tensor& x, std::span<const std::size_t> rows) {
  const std::size_t p = positions(x);
  Standardizer s;
  s.mean.assign(p, 0.0);
  s.scale.assign(p, 1.0);
  if (rows.empty()) return s;
  const double n = static_cast<double>(rows.size());
  for (auto r : rows) {
    for (std::size_t j = 0; j < p; ++j) s.mean[j] += x[r * p + j];
  }
  for (auto& m : s.mean) m /= n;
  std::vector<double> var(p, 0.0);
  for (auto r : rows) {
    for (std::size_t j = 0; j < p; ++j) var[j] += (x[r * p + j] - s.mean[j]) * (x[r * p + j] - s.mean[j]);
  }
  for (std::size_t j = 0; j < p; ++j) {
    const double sd = std::sqrt(var[j] / n);
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Tensor Standardizer::apply(const Tensor& x) const {
  const std::size_t p = positions(x);
  if (p != mean.size()) throw Error(ErrorCode::ShapeMismatch, "standardizer fitted on a different input width");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x[i] - mean[i % p]) / scale[i % p];
  return out;
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  auto shape = x.shape();
  const std::size_t p = positions(x);
  shape[0] = rows.size();
  std::vector<double> data;
  data.reserve(rows.size() * p);
  for (auto r : rows) {
    if (r >= x.dim(0)) throw Error(ErrorCode::ShapeMismatch, "row index out of range");
    data.insert(data.end(), x.data() + r * p, x.data() + (r + 1) * p);
  }
  return Tensor(std::move(shape), std::move(data));
}

FitSplit split_fit_validation(std::span<const std::size_t> rows, double fit_fraction) {
  const auto cut = static_cast<std::size_t>(std::floor(static_cast<double>(rows.size()) * fit_fraction));
  FitSplit s;
  s.fit.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(cut));
  s.validation.assign(rows.begin() + static_cast<std::ptrdiff_t>(cut), rows.end());
  return s;
}

double accuracy(std::span<const ProbabilityPair> predictions, std::span<const int> labels,
                std::span<const std::size_t> rows) {
  if (rows.empty()) return 0.0;
  std::size_t hit = 0;
  for (auto r : rows) hit += (predictions[r].up > 0.5 ? 1 : 0) == labels[r];
  return static_cast<double>(hit) / static_cast<double>(rows.size());
}

// ---------------------------------------------------------------- MBCNN

MbcnnNet::MbcnnNet(std::vector<BranchShape> shapes, const MbcnnHyper& hyper) : shapes_(std::move(shapes)) {
  if (shapes_.empty()) throw Error(ErrorCode::EmptyBranch, "network needs at least one branch");
  std::size_t concat = 0;
  for (std::size_t b = 0; b < shapes_.size(); ++b) {
    const auto& s = shapes_[b];
    if (s.width == 0 || s.channels == 0) {
      throw Error(ErrorCode::EmptyBranch, "branch " + std::to_string(b) + " has no inputs");
    }
    const std::size_t k = effective_kernel(hyper.kernel, s.width);
    const std::string name = "branch" + std::to_string(b);
    convs_.emplace_back(name + ".conv", s.channels, hyper.filters, k);
    widths_.push_back(hyper.filters * (s.width - k + 1));
    norms_.emplace_back(name + ".bn", widths_.back(), hyper.bn_momentum);
    concat += widths_.back();
  }
  hidden_ = nn::Dense("hidden", concat, hyper.dense_width, nn::Activation::ReLU);
  head_ = nn::Dense("head", hyper.dense_width, 2, nn::Activation::Identity);
}

void MbcnnNet::initialize(Rng* rng) {
  for (auto* p : parameters()) {
    p->zero_grad();
    if (p->name.ends_with(".gamma")) {
      p->value.fill(1.0);
    } else {
      p->value.fill(0.0);
    }
  }
  if (!rng) return;
  for (auto& c : convs_) {
    auto& k = c.kernel().value;
    glorot_uniform(k, k.dim(1) * k.dim(2), k.dim(0) * k.dim(2), *rng);
  }
  for (auto* d : {&hidden_, &head_}) {
    auto& w = d->weights().value;
    glorot_uniform(w, w.dim(0), w.dim(1), *rng);
  }
}

Tensor MbcnnNet::forward(const std::vector<Tensor>& inputs, nn::BatchNormMode mode) {
  if (inputs.size() != shapes_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "network has " + std::to_string(shapes_.size()) + " branches, got " +
                                              std::to_string(inputs.size()) + " inputs");
  }
  const std::size_t B = inputs.empty() ? 0 : inputs[0].dim(0);
  batch_ = B;
  std::size_t concat = std::accumulate(widths_.begin(), widths_.end(), std::size_t{0});
  Tensor joined({B, concat});
  std::size_t offset = 0;
  for (std::size_t b = 0; b < shapes_.size(); ++b) {
    const auto& x = inputs[b];
    if (x.rank() != 3 || x.dim(0) != B || x.dim(1) != shapes_[b].channels || x.dim(2) != shapes_[b].width) {
      throw Error(ErrorCode::ShapeMismatch, "branch " + std::to_string(b) + " input " + nn::shape_string(x.shape()));
    }
    Tensor conv = convs_[b].forward(x);
    Tensor flat({B, widths_[b]}, std::vector<double>(conv.values().begin(), conv.values().end()));
    Tensor normed = norms_[b].forward(flat, mode);
    for (std::size_t r = 0; r < B; ++r) {
      for (std::size_t j = 0; j < widths_[b]; ++j) joined.at(r, offset + j) = normed.at(r, j);
    }
    offset += widths_[b];
  }
  return head_.forward(hidden_.forward(joined));
}

void MbcnnNet::backward(const Tensor& grad_logits) {
  const Tensor g_joined = hidden_.backward(head_.backward(grad_logits));
  std::size_t offset = 0;
  for (std::size_t b = 0; b < shapes_.size(); ++b) {
    Tensor g({batch_, widths_[b]});
    for (std::size_t r = 0; r < batch_; ++r) {
      for (std::size_t j = 0; j < widths_[b]; ++j) g.at(r, j) = g_joined.at(r, offset + j);
    }
    const Tensor g_flat = norms_[b].backward(g);
    const std::size_t F = convs_[b].kernel().value.dim(0);
    Tensor g_conv({batch_, F, widths_[b] / F}, std::vector<double>(g_flat.values().begin(), g_flat.values().end()));
    convs_[b].backward(g_conv);
    offset += widths_[b];
  }
}

std::vector<nn::Parameter*> MbcnnNet::parameters() {
  std::vector<nn::Parameter*> out;
  for (std::size_t b = 0; b < convs_.size(); ++b) {
    for (auto* p : convs_[b].parameters()) out.push_back(p);
    for (auto* p : norms_[b].parameters()) out.push_back(p);
  }
  for (auto* p : hidden_.parameters()) out.push_back(p);
  for (auto* p : head_.parameters()) out.push_back(p);
  return out;
}

namespace {

// Running statistics travel as extra tensors next to the parameters.
struct StatsView {
  std::vector<Tensor> tensors;
  std::vector<nn::NamedTensor> named;
};

StatsView stats_of(std::vector<nn::BatchNorm>& norms, const std::vector<nn::Parameter*>& params) {
  StatsView v;
  v.tensors.reserve(norms.size() * 2);
  for (auto& n : norms) {
    v.tensors.emplace_back(std::vector<std::size_t>{n.state().running_mean.size()}, n.state().running_mean);
    v.tensors.emplace_back(std::vector<std::size_t>{n.state().running_var.size()}, n.state().running_var);
  }
  v.named = named(params);
  for (std::size_t i = 0; i < norms.size(); ++i) {
    const std::string base = norms[i].gamma().name.substr(0, norms[i].gamma().name.size() - 6);
    v.named.push_back({base + ".running_mean", &v.tensors[2 * i]});
    v.named.push_back({base + ".running_var", &v.tensors[2 * i + 1]});
  }
  return v;
}

}  // namespace

void MbcnnNet::save(std::ostream& out) {
  auto v = stats_of(norms_, parameters());
  nn::save_checkpoint(out, v.named);
}

void MbcnnNet::load(std::istream& in) {
  auto v = stats_of(norms_, parameters());
  nn::load_checkpoint(in, v.named);
  for (std::size_t i = 0; i < norms_.size(); ++i) {
    auto m = v.tensors[2 * i].values();
    auto s = v.tensors[2 * i + 1].values();
    norms_[i].state().running_mean.assign(m.begin(), m.end());
    norms_[i].state().running_var.assign(s.begin(), s.end());
  }
}

namespace {

std::vector<BranchShape> shapes_of(const std::vector<Tensor>& inputs) {
  std::vector<BranchShape> shapes;
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    const auto& x = inputs[b];
    if (x.rank() != 3) throw Error(ErrorCode::ShapeMismatch, "branch input must be [N, channels, width]");
    if (x.dim(2) == 0) throw Error(ErrorCode::EmptyBranch, "branch " + std::to_string(b) + " has no columns");
    shapes.push_back({x.dim(1), x.dim(2)});
  }
  return shapes;
}

std::vector<Tensor> scale_all(const std::vector<Standardizer>& scalers, const std::vector<Tensor>& inputs) {
  std::vector<Tensor> out;
  for (std::size_t b = 0; b < inputs.size(); ++b) out.push_back(scalers[b].apply(inputs[b]));
  return out;
}

std::vector<Tensor> gather_all(const std::vector<Tensor>& inputs, std::span<const std::size_t> rows) {
  std::vector<Tensor> out;
  for (const auto& x : inputs) out.push_back(gather_rows(x, rows));
  return out;
}

}  // namespace

MbcnnModel train_mbcnn(const std::vector<Tensor>& inputs, std::span<const int> labels,
                       std::span<const std::size_t> fit_rows, std::span<const std::size_t> validation_rows,
                       const MbcnnHyper& hyper, std::uint64_t seed) {
  ++g_training_calls;
  if (inputs.empty()) throw Error(ErrorCode::EmptyBranch, "no branch inputs");
  require_samples(fit_rows, kMinTrainingSamples);
  for (const auto& x : inputs) {
    if (x.rank() != 3 || x.dim(0) != labels.size()) {
      throw Error(ErrorCode::ShapeMismatch, "branch inputs and labels differ in sample count");
    }
  }
  MbcnnModel model;
  model.hyper = hyper;
  model.net = MbcnnNet(shapes_of(inputs), hyper);
  for (const auto& x : inputs) model.scalers.push_back(Standardizer::fit(x, fit_rows));
  const std::vector<Tensor> scaled = scale_all(model.scalers, inputs);

  Rng rng(seed);
  model.net.initialize(&rng);
  nn::TrainConfig tc;
  tc.epochs = hyper.epochs;
  tc.batch_size = hyper.batch_size;
  tc.adam.learning_rate = hyper.learning_rate;
  tc.l2 = hyper.l2;
  tc.min_batch = 2;
  const std::vector<int> fit_labels = labels_of(labels, fit_rows);
  std::vector<std::size_t> fit(fit_rows.begin(), fit_rows.end());
  auto params = model.net.parameters();
  nn::train_classifier(
      params, fit_labels, tc, rng,
      [&](std::span<const std::size_t> batch) {
        std::vector<std::size_t> rows;
        rows.reserve(batch.size());
        for (auto i : batch) rows.push_back(fit[i]);
        return model.net.forward(gather_all(scaled, rows), nn::BatchNormMode::Train);
      },
      [&](const Tensor& g) { model.net.backward(g); });

  const auto pred = to_pairs(model.net.forward(scaled, nn::BatchNormMode::Infer));
  model.training_accuracy = accuracy(pred, labels, fit_rows);
  model.validation_accuracy = accuracy(pred, labels, validation_rows);
  return model;
}

std::vector<ProbabilityPair> predict_mbcnn(MbcnnModel& model, const std::vector<Tensor>& inputs) {
  if (inputs.size() != model.scalers.size()) {
    throw Error(ErrorCode::ShapeMismatch, "model expects " + std::to_string(model.scalers.size()) + " branches");
  }
  return to_pairs(model.net.forward(scale_all(model.scalers, inputs), nn::BatchNormMode::Infer));
}

MbcnnModel zero_mbcnn(std::vector<BranchShape> shapes, const MbcnnHyper& hyper) {
  MbcnnModel model;
  model.hyper = hyper;
  for (const auto& s : shapes) {
    Standardizer st;
    st.mean.assign(s.channels * s.width, 0.0);
    st.scale.assign(s.channels * s.width, 1.0);
    model.scalers.push_back(std::move(st));
  }
  model.net = MbcnnNet(std::move(shapes), hyper);
  model.net.initialize(nullptr);
  return model;
}

// ------------------------------------------------------------- SC-MBCNN

std::vector<Tensor> cluster_branches(const Tensor& industry, const std::vector<std::vector<std::size_t>>& members) {
  if (industry.rank() != 3) throw Error(ErrorCode::ShapeMismatch, "industry input must be [N, lag, industries]");
  const std::size_t N = industry.dim(0), L = industry.dim(1);
  std::vector<Tensor> out;
  for (const auto& cols : members) {
    Tensor t({N, L, cols.size()});
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t j = 0; j < cols.size(); ++j) t.at(n, l, j) = industry.at(n, l, cols[j]);
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

ScMbcnnModel train_sc_mbcnn(const Tensor& industry, std::span<const std::string> names, std::span<const int> labels,
                            std::span<const std::size_t> cluster_rows, std::span<const std::size_t> fit_rows,
                            std::span<const std::size_t> validation_rows, const ScMbcnnHyper& hyper,
                            std::uint64_t seed) {
  if (industry.rank() != 3 || industry.dim(2) != names.size()) {
    throw Error(ErrorCode::ShapeMismatch, "industry input and names disagree");
  }
  const std::size_t n = names.size();
  spectral::IndustryMatrix m;
  m.industries.assign(names.begin(), names.end());
  m.features.assign(n, std::vector<double>(cluster_rows.size()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < cluster_rows.size(); ++r) m.features[i][r] = industry.at(cluster_rows[r], 0, i);
  }
  spectral::validate(m);

  // Process industries in name order so the result does not depend on the
  // column layout.
  std::vector<std::size_t> by_name(n);
  std::iota(by_name.begin(), by_name.end(), std::size_t{0});
  std::stable_sort(by_name.begin(), by_name.end(), [&](std::size_t a, std::size_t b) { return names[a] < names[b]; });
  spectral::IndustryMatrix sorted;
  for (auto i : by_name) {
    sorted.industries.push_back(m.industries[i]);
    sorted.features.push_back(m.features[i]);
  }
  const double median = spectral::median_pairwise_distance(sorted.features);
  const double sigma = (median > 0.0 ? median : 1.0) * hyper.sigma_scale;
  std::optional<std::size_t> k;
  if (hyper.cluster_count > 0) k = std::min(hyper.cluster_count, n);
  const auto c = spectral::cluster_industries(sorted, sigma, k, derive_seed(seed, {0x5c}));

  ScMbcnnModel model;
  model.names.assign(names.begin(), names.end());
  model.members.assign(c.k, {});
  for (std::size_t s = 0; s < n; ++s) model.members[c.assignment[s]].push_back(by_name[s]);
  model.clustering = c;
  std::vector<std::size_t> back(n);
  for (std::size_t s = 0; s < n; ++s) back[by_name[s]] = s;
  for (std::size_t i = 0; i < n; ++i) model.clustering.assignment[i] = c.assignment[back[i]];

  model.network = train_mbcnn(cluster_branches(industry, model.members), labels, fit_rows, validation_rows,
                              hyper.network(), derive_seed(seed, {0xcc}));
  return model;
}

std::vector<ProbabilityPair> predict_sc_mbcnn(ScMbcnnModel& model, const Tensor& industry) {
  return predict_mbcnn(model.network, cluster_branches(industry, model.members));
}

// ------------------------------------------------------------------ RNN

RnnNet::RnnNet(std::size_t input, std::size_t hidden1, std::size_t hidden2)
    : rnn_("rnn", input, hidden1, hidden2), head_("head", hidden2, 2, nn::Activation::Identity) {}

void RnnNet::initialize(Rng* rng) {
  for (auto* p : parameters()) {
    p->zero_grad();
    p->value.fill(0.0);
  }
  if (!rng) return;
  for (auto* p : {&rnn_.U(), &rnn_.W1(), &rnn_.V(), &rnn_.W2()}) {
    glorot_uniform(p->value, p->value.dim(1), p->value.dim(0), *rng);
  }
  glorot_uniform(head_.weights().value, head_.weights().value.dim(0), 2, *rng);
}

Tensor RnnNet::forward(const Tensor& x) { return head_.forward(rnn_.forward(x)); }

void RnnNet::backward(const Tensor& grad_logits) { rnn_.backward(head_.backward(grad_logits)); }

std::vector<nn::Parameter*> RnnNet::parameters() {
  auto out = rnn_.parameters();
  for (auto* p : head_.parameters()) out.push_back(p);
  return out;
}

void RnnNet::save(std::ostream& out) { nn::save_checkpoint(out, named(parameters())); }

void RnnNet::load(std::istream& in) { nn::load_checkpoint(in, named(parameters())); }

ProviderClassifier train_provider_classifier(const std::string& provider, const Tensor& sequence,
                                             std::span<const int> labels, std::span<const std::size_t> fit_rows,
                                             std::span<const std::size_t> validation_rows,
                                             const ProviderHyper& hyper, std::size_t batch_size, std::uint64_t seed) {
  ++g_training_calls;
  if (sequence.rank() != 3 || sequence.dim(0) != labels.size()) {
    throw Error(ErrorCode::ShapeMismatch, "provider sequence and labels differ in sample count");
  }
  if (sequence.dim(1) == 0) throw Error(ErrorCode::EmptySequence, "provider sequences have zero length");
  require_samples(fit_rows, 2);
  ProviderClassifier model;
  model.provider = provider;
  model.hyper = hyper;
  model.scaler = Standardizer::fit(sequence, fit_rows);
  const Tensor scaled = model.scaler.apply(sequence);
  model.net = RnnNet(sequence.dim(2), hyper.hidden1, hyper.hidden2);
  Rng rng(seed);
  model.net.initialize(&rng);

  nn::TrainConfig tc;
  tc.epochs = hyper.epochs;
  tc.batch_size = batch_size;
  tc.adam.learning_rate = hyper.learning_rate;
  const std::vector<int> fit_labels = labels_of(labels, fit_rows);
  std::vector<std::size_t> fit(fit_rows.begin(), fit_rows.end());
  auto params = model.net.parameters();
  nn::train_classifier(
      params, fit_labels, tc, rng,
      [&](std::span<const std::size_t> batch) {
        std::vector<std::size_t> rows;
        rows.reserve(batch.size());
        for (auto i : batch) rows.push_back(fit[i]);
        return model.net.forward(gather_rows(scaled, rows));
      },
      [&](const Tensor& g) { model.net.backward(g); });

  if (validation_rows.empty()) throw Error(ErrorCode::EmptyValidation, "provider validation segment is empty");
  const auto pred = to_pairs(model.net.forward(gather_rows(scaled, validation_rows)));
  std::vector<int> predicted, actual;
  for (std::size_t i = 0; i < validation_rows.size(); ++i) {
    predicted.push_back(pred[i].up > 0.5 ? 1 : 0);
    actual.push_back(labels[validation_rows[i]]);
  }
  std::size_t hit = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) hit += predicted[i] == actual[i];
  model.validation_accuracy = static_cast<double>(hit) / static_cast<double>(actual.size());
  model.reliability = er::estimate_reliability(predicted, actual);
  return model;
}

std::vector<ProbabilityPair> predict_provider(ProviderClassifier& model, const Tensor& sequence) {
  return to_pairs(model.net.forward(model.scaler.apply(sequence)));
}

RnnErModel train_rnn_er(std::span<const std::string> providers, const std::vector<Tensor>& sequences,
                        std::span<const int> labels, std::span<const std::size_t> fit_rows,
                        std::span<const std::size_t> validation_rows, const RnnErHyper& hyper, std::uint64_t seed) {
  if (providers.size() != sequences.size() || providers.empty()) {
    throw Error(ErrorCode::ShapeMismatch, "provider names and sequences differ in count");
  }
  RnnErModel model;
  double total = 0.0;
  for (std::size_t i = 0; i < providers.size(); ++i) {
    const ProviderHyper h = hyper.provider(i);
    model.providers.push_back(train_provider_classifier(providers[i], sequences[i], labels, fit_rows,
                                                        validation_rows, h, hyper.batch_size,
                                                        derive_seed(seed, {i})));
    model.weights.push_back(std::max(0.0, h.weight));
    total += model.weights.back();
  }
  for (auto& w : model.weights) w = total > 0.0 ? w / total : 1.0 / static_cast<double>(providers.size());
  const auto fused = predict_rnn_er(model, sequences);
  model.validation_accuracy = accuracy(fused, labels, validation_rows);
  return model;
}

std::vector<ProbabilityPair> predict_rnn_er(RnnErModel& model, const std::vector<Tensor>& sequences) {
  if (sequences.size() != model.providers.size()) {
    throw Error(ErrorCode::ShapeMismatch, "model expects " + std::to_string(model.providers.size()) + " providers");
  }
  std::vector<std::vector<ProbabilityPair>> per;
  std::vector<double> reliab;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    per.push_back(predict_provider(model.providers[i], sequences[i]));
    reliab.push_back(model.providers[i].reliability);
  }
  const std::size_t N = per.empty() ? 0 : per[0].size();
  std::vector<ProbabilityPair> out(N);
  std::vector<ProbabilityPair> sample(sequences.size());
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t i = 0; i < per.size(); ++i) sample[i] = per[i][n];
    out[n] = er::fuse_providers(sample, model.weights, reliab);
  }
  return out;
}

// --------------------------------------------------------------- inputs

namespace {

Tensor block_tensor(const data::FeatureBlock& b, std::size_t n) {
  return Tensor({n, b.lag, b.width}, b.values);
}

}  // namespace

std::vector<Tensor> global_inputs(const data::SampleMatrix& samples) {
  std::vector<Tensor> out;
  for (const auto& b : samples.branches) out.push_back(block_tensor(b, samples.size()));
  return out;
}

Tensor industry_input(const data::SampleMatrix& samples) { return block_tensor(samples.industry, samples.size()); }

std::vector<Tensor> provider_inputs(const data::SampleMatrix& samples) {
  const std::size_t N = samples.size();
  const std::size_t T = samples.market.lag;
  std::vector<Tensor> out;
  for (const auto& s : samples.sentiment) {
    if (s.lag != T) throw Error(ErrorCode::ShapeMismatch, "market and sentiment lags must agree");
    const std::size_t S = data::kMarketFeatureCount + data::kSentimentFeatureCount;
    Tensor t({N, T, S});
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t step = 0; step < T; ++step) {
        const std::size_t l = T - 1 - step;
        for (std::size_t c = 0; c < data::kMarketFeatureCount; ++c) t.at(n, step, c) = samples.market.at(n, l, c);
        for (std::size_t c = 0; c < data::kSentimentFeatureCount; ++c) {
          t.at(n, step, data::kMarketFeatureCount + c) = s.at(n, l, c);
        }
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<int> label_vector(const data::SampleMatrix& samples) {
  std::vector<int> out;
  out.reserve(samples.size());
  for (auto d : samples.labels) out.push_back(data::as_int(d));
  return out;
}

}  // namespace tdse::extract
