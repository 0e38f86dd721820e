#include <doctest.h>

#include <cmath>
#include <numeric>

#include "tdse/error.hpp"
#include "tdse/extractors.hpp"
#include "tdse/rng.hpp"

using namespace tdse;
using namespace tdse::extract;
using nn::Tensor;

namespace {

std::vector<std::size_t> iota(std::size_t from, std::size_t to) {
  std::vector<std::size_t> v(to - from);
  std::iota(v.begin(), v.end(), from);
  return v;
}

Tensor noise(Rng& rng, std::vector<std::size_t> shape) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.normal();
  return t;
}

struct Planted {
  std::vector<Tensor> inputs;
  std::vector<int> labels;
};

/// Five [N, 1, 2] branches; the label is the sign of branch 2's first column.
Planted planted_global(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Planted p;
  for (int b = 0; b < 5; ++b) p.inputs.push_back(noise(rng, {n, 1, 2}));
  for (std::size_t i = 0; i < n; ++i) p.labels.push_back(p.inputs[2].at(i, 0, 0) > 0.0 ? 1 : 0);
  return p;
}

double held_out(const std::vector<ProbabilityPair>& pred, const std::vector<int>& labels, std::size_t from) {
  return accuracy(pred, labels, iota(from, labels.size()));
}

MbcnnHyper quick() {
  MbcnnHyper h;
  h.epochs = 30;
  h.learning_rate = 1e-2;
  return h;
}

}  // namespace

TEST_CASE("mbcnn learns a planted branch signal") {
  const auto p = planted_global(500, 1);
  auto model = train_mbcnn(p.inputs, p.labels, iota(0, 320), iota(320, 400), quick(), 7);
  const auto pred = predict_mbcnn(model, p.inputs);
  CHECK(held_out(pred, p.labels, 400) > 0.9);
  for (const auto& q : pred) CHECK(std::fabs(q.up + q.down - 1.0) < 1e-9);
  CHECK(model.training_accuracy >= 0.5);
}

TEST_CASE("mbcnn on a single class") {
  auto p = planted_global(120, 2);
  std::fill(p.labels.begin(), p.labels.end(), 1);
  auto model = train_mbcnn(p.inputs, p.labels, iota(0, 100), iota(100, 120), quick(), 3);
  CHECK(model.training_accuracy == 1.0);
  for (const auto& q : predict_mbcnn(model, p.inputs)) CHECK(q.up > 0.5);
}

TEST_CASE("mbcnn determinism and errors") {
  const auto p = planted_global(120, 3);
  auto a = train_mbcnn(p.inputs, p.labels, iota(0, 100), iota(100, 120), quick(), 11);
  auto b = train_mbcnn(p.inputs, p.labels, iota(0, 100), iota(100, 120), quick(), 11);
  const auto pa = a.net.parameters(), pb = b.net.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);
  CHECK_THROWS_AS(train_mbcnn(p.inputs, p.labels, iota(0, 49), iota(49, 60), quick(), 1), Error);
  CHECK_THROWS_AS(train_mbcnn({}, p.labels, iota(0, 100), {}, quick(), 1), Error);
  std::vector<Tensor> four(p.inputs.begin(), p.inputs.begin() + 4);
  CHECK_THROWS_AS(predict_mbcnn(a, four), Error);
}

TEST_CASE("untrained zero model is undecided") {
  auto z = zero_mbcnn({{1, 2}, {1, 3}, {2, 2}, {1, 1}, {1, 2}}, {});
  Rng rng(4);
  const std::vector<Tensor> in{noise(rng, {3, 1, 2}), noise(rng, {3, 1, 3}), noise(rng, {3, 2, 2}),
                               noise(rng, {3, 1, 1}), noise(rng, {3, 1, 2})};
  for (const auto& q : predict_mbcnn(z, in)) {
    CHECK(q.up == 0.5);
    CHECK(q.down == 0.5);
  }
}

TEST_CASE("single-sample prediction matches a layer-by-layer composition") {
  const auto p = planted_global(200, 5);
  MbcnnHyper h = quick();
  h.filters = 3;
  h.dense_width = 6;
  auto model = train_mbcnn(p.inputs, p.labels, iota(0, 160), iota(160, 200), h, 9);
  const std::size_t s = 173;
  std::vector<Tensor> one;
  for (const auto& x : p.inputs) one.push_back(gather_rows(x, std::vector<std::size_t>{s}));
  const auto got = predict_mbcnn(model, one)[0];

  std::vector<double> joined;
  for (std::size_t b = 0; b < 5; ++b) {
    const auto& x = p.inputs[b];
    const auto& sc = model.scalers[b];
    const std::size_t C = x.dim(1), W = x.dim(2);
    std::vector<std::vector<double>> chan(C, std::vector<double>(W));
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t w = 0; w < W; ++w) chan[c][w] = (x.at(s, c, w) - sc.mean[c * W + w]) / sc.scale[c * W + w];
    auto& conv = model.net.convs()[b].kernel().value;
    const std::size_t F = conv.dim(0), K = conv.dim(2);
    std::vector<double> flat;
    for (std::size_t f = 0; f < F; ++f) {
      // One input channel, so the convolution is the free-function form.
      REQUIRE(C == 1);
      const std::vector<double> kernel(conv.data() + f * K, conv.data() + (f + 1) * K);
      for (double v : nn::conv1d_forward(chan[0], kernel)) flat.push_back(v);
    }
    auto& bn = model.net.norms()[b];
    const auto normed = nn::batchnorm_forward(Tensor({1, flat.size()}, flat), bn.gamma().value.values(),
                                              bn.beta().value.values(), nn::BatchNormMode::Infer, bn.state());
    joined.insert(joined.end(), normed.values().begin(), normed.values().end());
  }
  const auto& hid = model.net.hidden();
  const auto& head = model.net.head();
  const auto z1 = nn::dense_forward(joined, hid.weights().value, hid.bias().value.values(), nn::Activation::ReLU);
  const auto z2 = nn::dense_forward(z1, head.weights().value, head.bias().value.values(), nn::Activation::Identity);
  const auto prob = nn::softmax(z2);
  CHECK(std::fabs(got.up - prob[1]) < 1e-12);
  CHECK(std::fabs(got.down - prob[0]) < 1e-12);
  CHECK(predict_mbcnn(model, one)[0].up == got.up);
}

namespace {

struct Industry {
  Tensor x;  // [N, 5, 6]
  std::vector<std::string> names;
  std::vector<int> labels;
};

/// Industries a, c, e follow one factor and b, d, f another; the label is
/// the sign of the first group's lag-0 mean.
Industry planted_industry(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Industry d{Tensor({n, 5, 6}), {"a", "b", "c", "d", "e", "f"}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < 5; ++l) {
      const double fa = rng.normal(), fb = rng.normal();
      for (std::size_t j = 0; j < 6; ++j) d.x.at(i, l, j) = (j % 2 == 0 ? fa : fb) + 0.15 * rng.normal();
    }
    d.labels.push_back(d.x.at(i, 0, 0) + d.x.at(i, 0, 2) + d.x.at(i, 0, 4) > 0.0 ? 1 : 0);
  }
  return d;
}

ScMbcnnHyper sc_quick() {
  ScMbcnnHyper h;
  h.epochs = 30;
  h.learning_rate = 1e-2;
  return h;
}

}  // namespace

TEST_CASE("sc-mbcnn") {
  const auto d = planted_industry(500, 6);
  const auto fit = iota(0, 320), val = iota(320, 400), train = iota(0, 400);

  SUBCASE("recovers the planted clusters and the signal") {
    auto h = sc_quick();
    h.cluster_count = 2;
    auto m = train_sc_mbcnn(d.x, d.names, d.labels, train, fit, val, h, 3);
    REQUIRE(m.members.size() == 2);
    CHECK(m.members[0] == std::vector<std::size_t>{0, 2, 4});
    CHECK(m.members[1] == std::vector<std::size_t>{1, 3, 5});
    CHECK(held_out(predict_sc_mbcnn(m, d.x), d.labels, 400) > 0.9);
  }
  SUBCASE("one cluster is a single-branch network") {
    auto h = sc_quick();
    h.cluster_count = 1;
    auto m = train_sc_mbcnn(d.x, d.names, d.labels, train, fit, val, h, 3);
    CHECK(m.members.size() == 1);
    CHECK(m.network.net.shapes().size() == 1);
    CHECK(m.network.net.shapes()[0].width == 6);
  }
  SUBCASE("permuted industry columns give identical predictions") {
    auto m = train_sc_mbcnn(d.x, d.names, d.labels, train, fit, val, sc_quick(), 3);
    const std::vector<std::size_t> perm{4, 1, 5, 0, 3, 2};
    Tensor px(d.x.shape());
    std::vector<std::string> pn;
    for (std::size_t j = 0; j < 6; ++j) pn.push_back(d.names[perm[j]]);
    for (std::size_t i = 0; i < d.x.dim(0); ++i)
      for (std::size_t l = 0; l < 5; ++l)
        for (std::size_t j = 0; j < 6; ++j) px.at(i, l, j) = d.x.at(i, l, perm[j]);
    auto pm = train_sc_mbcnn(px, pn, d.labels, train, fit, val, sc_quick(), 3);
    const auto a = predict_sc_mbcnn(m, d.x), b = predict_sc_mbcnn(pm, px);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].up == b[i].up);
  }
  SUBCASE("test rows never influence the fit") {
    auto m = train_sc_mbcnn(d.x, d.names, d.labels, train, fit, val, sc_quick(), 3);
    auto x2 = d.x;
    Rng rng(99);
    for (std::size_t i = 400; i < x2.dim(0); ++i)
      for (std::size_t l = 0; l < 5; ++l)
        for (std::size_t j = 0; j < 6; ++j) x2.at(i, l, j) = 10.0 * rng.normal();
    auto m2 = train_sc_mbcnn(x2, d.names, d.labels, train, fit, val, sc_quick(), 3);
    CHECK(m2.members == m.members);
    const auto a = predict_sc_mbcnn(m, d.x), b = predict_sc_mbcnn(m2, d.x);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].up == b[i].up);
  }
}

namespace {

Tensor provider_sequence(Rng& rng, std::size_t n, std::size_t t, std::vector<int>* labels, bool planted) {
  Tensor x = noise(rng, {n, t, 10});
  labels->clear();
  for (std::size_t i = 0; i < n; ++i) {
    if (planted) {
      const int y = static_cast<int>(rng.index(2));
      for (std::size_t s = 0; s < t; ++s) x.at(i, s, 6) = y ? 0.7 + 0.1 * rng.uniform() : 0.2 + 0.1 * rng.uniform();
      labels->push_back(y);
    } else {
      labels->push_back(static_cast<int>(rng.index(2)));
    }
  }
  return x;
}

}  // namespace

TEST_CASE("provider classifier") {
  ProviderHyper h;
  h.epochs = 30;
  h.learning_rate = 1e-2;
  SUBCASE("sentiment that matches the label") {
    Rng rng(12);
    std::vector<int> y;
    const auto x = provider_sequence(rng, 300, 2, &y, true);
    auto m = train_provider_classifier("P", x, y, iota(0, 200), iota(200, 250), h, 32, 4);
    CHECK(m.validation_accuracy > 0.95);
    CHECK(held_out(predict_provider(m, x), y, 250) > 0.95);
    CHECK(m.reliability == 0.95);
  }
  SUBCASE("pure noise stays near chance") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(100 + seed);
      std::vector<int> y;
      const auto x = provider_sequence(rng, 200, 1, &y, false);
      auto m = train_provider_classifier("P", x, y, iota(0, 120), iota(120, 200), h, 32, seed);
      CHECK(m.validation_accuracy >= 0.35);
      CHECK(m.validation_accuracy <= 0.65);
    }
  }
  SUBCASE("zero-length sequences") {
    const Tensor x({100, 0, 10});
    const std::vector<int> y(100, 1);
    try {
      train_provider_classifier("P", x, y, iota(0, 80), iota(80, 100), h, 32, 1);
      FAIL("expected EmptySequence");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptySequence);
    }
  }
}

TEST_CASE("rnn-er fuses providers") {
  Rng rng(13);
  std::vector<int> y;
  const auto good = provider_sequence(rng, 300, 1, &y, true);
  std::vector<int> unused;
  std::vector<Tensor> seqs{good, provider_sequence(rng, 300, 1, &unused, false),
                           provider_sequence(rng, 300, 1, &unused, false)};
  RnnErHyper h;
  for (int i = 0; i < 3; ++i) h.providers.push_back({8, 8, 1e-2, 30, 1.0});
  const std::vector<std::string> names{"good", "n1", "n2"};
  auto m = train_rnn_er(names, seqs, y, iota(0, 200), iota(200, 250), h, 5);
  CHECK(m.weights.size() == 3);
  CHECK(std::fabs(m.weights[0] + m.weights[1] + m.weights[2] - 1.0) < 1e-12);
  const auto pred = predict_rnn_er(m, seqs);
  CHECK(held_out(pred, y, 250) > 0.9);
  for (const auto& q : pred) CHECK(std::fabs(q.up + q.down - 1.0) < 1e-9);
}
