#include <doctest.h>

#include <cmath>
#include <sstream>

#include "tdse/error.hpp"
#include "tdse/extractors.hpp"
#include "tdse/nn.hpp"
#include "tdse/rng.hpp"

using namespace tdse;
using namespace tdse::nn;

namespace {

std::vector<double> randoms(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape) {
  Tensor t(std::move(shape));
  for (auto& x : t.values()) x = rng.normal();
  return t;
}

std::vector<int> random_labels(Rng& rng, std::size_t n) {
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng.index(2));
  return y;
}

}  // namespace

TEST_CASE("conv1d forward") {
  CHECK(conv1d_forward(std::vector<double>{1, 2, 3}, std::vector<double>{1, 0}) == std::vector<double>{1, 2});
  CHECK(conv1d_forward(std::vector<double>{-1, -2}, std::vector<double>{1}) == std::vector<double>{0, 0});
  CHECK_THROWS_AS(conv1d_forward(std::vector<double>{1}, std::vector<double>{1, 1}), Error);

  Rng rng(1);
  const auto x = randoms(rng, 8), w = randoms(rng, 3);
  const auto out = conv1d_forward(x, w);
  REQUIRE(out.size() == 6);
  for (std::size_t j = 0; j < 6; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < 3; ++k) s += w[k] * x[j + k];
    CHECK(std::fabs(out[j] - std::max(0.0, s)) < 1e-12);
  }
}

TEST_CASE("batchnorm forward") {
  const std::vector<double> one{1.0}, zero{0.0};
  auto state = BatchNormState::fresh(1);
  const auto sym = batchnorm_forward(Tensor({2, 1}, {1.0, -1.0}), one, zero, BatchNormMode::Train, state);
  CHECK(sym[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(sym[1] == doctest::Approx(-1.0).epsilon(1e-5));

  const std::vector<double> beta{0.7};
  const auto flat = batchnorm_forward(Tensor({3, 1}, 4.0), one, beta, BatchNormMode::Train, state);
  for (std::size_t i = 0; i < 3; ++i) CHECK(flat[i] == 0.7);

  auto s1 = BatchNormState::fresh(1);
  CHECK_THROWS_AS(batchnorm_forward(Tensor({1, 1}, 1.0), one, zero, BatchNormMode::Train, s1), Error);

  Rng rng(2);
  const auto batch = random_tensor(rng, {4, 3});
  const std::vector<double> gamma{0.5, 2.0, 1.5}, b{-1.0, 0.0, 3.0};
  auto s3 = BatchNormState::fresh(3);
  const auto out = batchnorm_forward(batch, gamma, b, BatchNormMode::Train, s3);
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0, var = 0.0, in_mean = 0.0, in_var = 0.0;
    for (std::size_t r = 0; r < 4; ++r) {
      mean += out.at(r, c) / 4;
      in_mean += batch.at(r, c) / 4;
    }
    for (std::size_t r = 0; r < 4; ++r) {
      var += std::pow(out.at(r, c) - mean, 2) / 4;
      in_var += std::pow(batch.at(r, c) - in_mean, 2) / 4;
    }
    CHECK(std::fabs(mean - b[c]) < 1e-6);
    // The epsilon in the denominator shrinks the spread by sqrt(var / (var + eps)).
    CHECK(std::fabs(std::sqrt(var) - gamma[c] * std::sqrt(in_var / (in_var + 1e-5))) < 1e-6);
    CHECK(std::fabs(std::sqrt(var) - gamma[c]) < 1e-4 * gamma[c] / in_var + 1e-6);
    CHECK(s3.running_mean[c] == doctest::Approx(0.1 * in_mean).epsilon(1e-12));
  }
  const auto inferred = batchnorm_forward(batch, gamma, b, BatchNormMode::Infer, s3);
  CHECK(inferred.at(0, 0) ==
        doctest::Approx(gamma[0] * (batch.at(0, 0) - s3.running_mean[0]) / std::sqrt(s3.running_var[0] + 1e-5) + b[0]));
}

TEST_CASE("dense forward") {
  Tensor eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  const std::vector<double> x{0.5, 2.0, 0.0}, zero(3, 0.0), bias{-1.0, 0.5, 2.0};
  CHECK(dense_forward(x, eye, zero, Activation::ReLU) == x);
  CHECK(dense_forward(x, Tensor({3, 3}), bias, Activation::ReLU) == std::vector<double>{0.0, 0.5, 2.0});
  CHECK_THROWS_AS(dense_forward(std::vector<double>{1.0}, eye, zero, Activation::ReLU), Error);

  Rng rng(3);
  const auto w = random_tensor(rng, {4, 5});
  const auto v = randoms(rng, 4), b = randoms(rng, 5);
  const auto out = dense_forward(v, w, b, Activation::Identity);
  for (std::size_t i = 0; i < 5; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < 4; ++k) s += w.at(k, i) * v[k];
    CHECK(std::fabs(out[i] - s) < 1e-12);
  }
}

namespace {

RnnParams random_rnn(Rng& rng, std::size_t s, std::size_t h1, std::size_t h2) {
  return {random_tensor(rng, {h1, s}), random_tensor(rng, {h1, h1}), random_tensor(rng, {h1}),
          random_tensor(rng, {h2, h1}), random_tensor(rng, {h2, h2}), random_tensor(rng, {h2})};
}

std::vector<double> matvec(const Tensor& m, const std::vector<double>& x) {
  std::vector<double> out(m.dim(0), 0.0);
  for (std::size_t r = 0; r < m.dim(0); ++r)
    for (std::size_t c = 0; c < m.dim(1); ++c) out[r] += m.at(r, c) * x[c];
  return out;
}

}  // namespace

TEST_CASE("rnn forward") {
  Rng rng(4);
  const RnnParams zero{Tensor({3, 2}), Tensor({3, 3}), Tensor({3}), Tensor({2, 3}), Tensor({2, 2}), Tensor({2})};
  const std::vector<std::vector<double>> seq{{1.0, 2.0}, {0.5, -1.0}, {3.0, 0.0}};
  CHECK(rnn_forward(seq, zero) == std::vector<double>(2, 0.0));
  CHECK_THROWS_AS(rnn_forward({}, zero), Error);

  const auto p = random_rnn(rng, 2, 3, 2);
  std::vector<double> h1(3, 0.0), h2(2, 0.0);
  for (const auto& x : seq) {
    const auto a = matvec(p.U, x), r1 = matvec(p.W1, h1);
    for (std::size_t i = 0; i < 3; ++i) h1[i] = std::tanh(a[i] + r1[i] + p.b1[i]);
    const auto c = matvec(p.V, h1), r2 = matvec(p.W2, h2);
    for (std::size_t i = 0; i < 2; ++i) h2[i] = std::tanh(c[i] + r2[i] + p.b2[i]);
  }
  const auto out = rnn_forward(seq, p);
  for (std::size_t i = 0; i < 2; ++i) CHECK(std::fabs(out[i] - h2[i]) < 1e-12);

  const std::vector<std::vector<double>> single{seq[0]};
  const auto one = rnn_forward(single, p);
  const auto first = dense_forward(seq[0], [&] {
    Tensor t({2, 3});
    for (std::size_t k = 0; k < 2; ++k)
      for (std::size_t i = 0; i < 3; ++i) t.at(k, i) = p.U.at(i, k);
    return t;
  }(), p.b1.values(), Activation::Tanh);
  const auto second = dense_forward(first, [&] {
    Tensor t({3, 2});
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t i = 0; i < 2; ++i) t.at(k, i) = p.V.at(i, k);
    return t;
  }(), p.b2.values(), Activation::Tanh);
  for (std::size_t i = 0; i < 2; ++i) CHECK(std::fabs(one[i] - second[i]) < 1e-12);
}

TEST_CASE("softmax") {
  const auto even = softmax(std::vector<double>{0.0, 0.0});
  CHECK(even[0] == 0.5);
  const auto big = softmax(std::vector<double>{1000.0, 0.0});
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(big[1] < 1e-300);
  CHECK(std::isfinite(big[1]));
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const auto z = randoms(rng, 4);
    const auto p = softmax(z);
    double denom = 0.0, total = 0.0;
    for (double v : z) denom += std::exp(v);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(std::fabs(p[i] - std::exp(z[i]) / denom) < 1e-12);
      CHECK(p[i] >= 0.0);
      total += p[i];
    }
    CHECK(std::fabs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("gradient checks") {
  constexpr double kTol = 1e-4;
  Rng rng(6);

  SUBCASE("conv, batchnorm and dense stack") {
    Conv1d conv("c", 2, 3, 2);
    BatchNorm bn("bn", 3 * 4);
    Dense dense("d", 12, 2, Activation::Identity);
    glorot_uniform(conv.kernel().value, 4, 6, rng);
    glorot_uniform(dense.weights().value, 12, 2, rng);
    for (auto& g : bn.gamma().value.values()) g = 0.5 + rng.uniform();
    for (auto& b : bn.beta().value.values()) b = 0.1 * rng.normal();
    const auto x = random_tensor(rng, {6, 2, 5});
    const auto y = random_labels(rng, 6);
    auto run = [&](bool grads) {
      auto h = conv.forward(x);
      h = Tensor({6, 12}, std::vector<double>(h.values().begin(), h.values().end()));
      const auto z = bn.forward(h, BatchNormMode::Train);
      const auto logits = dense.forward(z);
      Tensor g;
      const double loss = softmax_cross_entropy(logits, y, grads ? &g : nullptr);
      if (grads) {
        auto gz = bn.backward(dense.backward(g));
        conv.backward(Tensor({6, 3, 4}, std::vector<double>(gz.values().begin(), gz.values().end())));
      }
      return loss;
    };
    std::vector<Parameter*> params{&conv.kernel(), &bn.gamma(), &bn.beta(), &dense.weights(), &dense.bias()};
    for (auto* p : params) p->zero_grad();
    run(true);
    const auto r = check_gradients(params, [&] { return run(false); });
    CHECK(r.checked == 12 + 12 + 12 + 24 + 2);
    CHECK(r.max_relative_error < kTol);
  }

  SUBCASE("three-branch toy mbcnn") {
    extract::MbcnnHyper hyper;
    hyper.kernel = 2;
    hyper.filters = 2;
    hyper.dense_width = 5;
    extract::MbcnnNet net({{2, 4}, {1, 3}, {3, 5}}, hyper);
    net.initialize(&rng);
    std::vector<Tensor> inputs{random_tensor(rng, {5, 2, 4}), random_tensor(rng, {5, 1, 3}),
                               random_tensor(rng, {5, 3, 5})};
    const auto y = random_labels(rng, 5);
    auto params = net.parameters();
    for (auto* p : params) p->zero_grad();
    Tensor g;
    softmax_cross_entropy(net.forward(inputs, BatchNormMode::Train), y, &g);
    net.backward(g);
    const auto r = check_gradients(
        params, [&] { return softmax_cross_entropy(net.forward(inputs, BatchNormMode::Train), y, nullptr); });
    CHECK(r.checked > 50);
    CHECK(r.max_relative_error < kTol);
  }

  SUBCASE("rnn through four steps") {
    extract::RnnNet net(3, 4, 3);
    net.initialize(&rng);
    const auto x = random_tensor(rng, {5, 4, 3});
    const auto y = random_labels(rng, 5);
    auto params = net.parameters();
    for (auto* p : params) p->zero_grad();
    Tensor g;
    softmax_cross_entropy(net.forward(x), y, &g);
    net.backward(g);
    const auto r = check_gradients(params, [&] { return softmax_cross_entropy(net.forward(x), y, nullptr); });
    CHECK(r.checked == 12 + 16 + 4 + 12 + 9 + 3 + 6 + 2);
    CHECK(r.max_relative_error < kTol);
  }

  SUBCASE("gradient vanishes at a constructed minimum") {
    Dense d("d", 1, 2, Activation::Identity);
    // With zero weights and equal biases the two classes are balanced, which
    // is the loss minimum for a 50/50 label set.
    const Tensor x({4, 1}, {1.0, -1.0, 2.0, -2.0});
    const std::vector<int> y{0, 1, 0, 1};
    Tensor g;
    softmax_cross_entropy(d.forward(Tensor({4, 1}, 0.0)), y, &g);
    d.weights().zero_grad();
    d.bias().zero_grad();
    d.backward(g);
    for (double v : d.bias().grad.values()) CHECK(std::fabs(v) < 1e-15);
    for (double v : d.weights().grad.values()) CHECK(std::fabs(v) < 1e-15);
  }
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Tensor p({3}, {1.0, 2.0, 3.0});
    const Tensor g({3}, 0.0);
    const auto before = p;
    AdamState state;
    Tensor* ps[] = {&p};
    const Tensor* gs[] = {&g};
    for (int i = 0; i < 10; ++i) adam_step(ps, gs, state);
    CHECK(p == before);
  }
  SUBCASE("constant gradient moves by lr times its sign") {
    Tensor p({2}, {0.0, 0.0});
    const Tensor g({2}, {3.0, -0.2});
    AdamState state;
    Tensor* ps[] = {&p};
    const Tensor* gs[] = {&g};
    double last0 = 0.0, last1 = 0.0;
    for (int i = 0; i < 200; ++i) {
      last0 = p[0];
      last1 = p[1];
      adam_step(ps, gs, state);
    }
    CHECK(p[0] - last0 == doctest::Approx(-1e-3).epsilon(1e-6));
    CHECK(p[1] - last1 == doctest::Approx(1e-3).epsilon(1e-6));
  }
  SUBCASE("two-parameter quadratic") {
    Tensor p({2}, {3.0, -2.0});
    Tensor g({2});
    AdamState state;
    state.config.learning_rate = 0.05;
    Tensor* ps[] = {&p};
    const Tensor* gs[] = {&g};
    auto loss = [&] { return std::pow(p[0] - 1.0, 2) + 4.0 * std::pow(p[1] + 0.5, 2); };
    for (int i = 0; i < 500; ++i) {
      g[0] = 2.0 * (p[0] - 1.0);
      g[1] = 8.0 * (p[1] + 0.5);
      adam_step(ps, gs, state);
    }
    CHECK(loss() < 1e-6);
  }
  SUBCASE("shape mismatch") {
    Tensor p({2});
    const Tensor g({3});
    AdamState state;
    Tensor* ps[] = {&p};
    const Tensor* gs[] = {&g};
    CHECK_THROWS_AS(adam_step(ps, gs, state), Error);
  }
}

TEST_CASE("checkpoint round trip is exact") {
  Rng rng(7);
  auto a = random_tensor(rng, {3, 4});
  auto b = random_tensor(rng, {5});
  for (auto& v : a.values()) v *= 1e-7 * rng.uniform();
  std::ostringstream out;
  const std::vector<NamedTensor> save{{"a", &a}, {"b", &b}};
  save_checkpoint(out, save);
  Tensor a2({3, 4}), b2({5});
  std::istringstream in(out.str());
  const std::vector<NamedTensor> load{{"a", &a2}, {"b", &b2}};
  load_checkpoint(in, load);
  CHECK(a2 == a);
  CHECK(b2 == b);
  Tensor wrong({4, 3});
  std::istringstream again(out.str());
  const std::vector<NamedTensor> bad{{"a", &wrong}, {"b", &b2}};
  CHECK_THROWS_AS(load_checkpoint(again, bad), Error);
}

TEST_CASE("training is deterministic for a fixed seed") {
  auto train = [] {
    Rng data(8);
    const auto x = random_tensor(data, {40, 3});
    std::vector<int> y(40);
    for (std::size_t i = 0; i < 40; ++i) y[i] = x.at(i, 0) + x.at(i, 1) > 0 ? 1 : 0;
    Dense d("d", 3, 2, Activation::Identity);
    Rng rng(9);
    glorot_uniform(d.weights().value, 3, 2, rng);
    std::vector<Parameter*> params{&d.weights(), &d.bias()};
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 8;
    cfg.adam.learning_rate = 0.05;
    const double loss = train_classifier(
        params, y, cfg, rng,
        [&](std::span<const std::size_t> rows) {
          Tensor b({rows.size(), 3});
          for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t c = 0; c < 3; ++c) b.at(i, c) = x.at(rows[i], c);
          return d.forward(b);
        },
        [&](const Tensor& g) { d.backward(g); });
    return std::make_pair(loss, d.weights().value);
  };
  const auto a = train(), b = train();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK(a.first < 0.4);
}
