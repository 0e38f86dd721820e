#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "tdse/error.hpp"
#include "tdse/meta.hpp"
#include "tdse/rng.hpp"
#include "oracles.hpp"

using namespace tdse;
using namespace tdse::meta;
using namespace oracles;

namespace {

Rows random_rows(Rng& rng, std::size_t n, std::size_t d) {
  Rows X(n, Row(d));
  for (auto& r : X)
    for (auto& v : r) v = rng.uniform();
  return X;
}

std::vector<int> linear_labels(const Rows& X) {
  std::vector<int> y;
  for (const auto& r : X) y.push_back(r[0] + 0.5 * r[1] > 0.75 ? 1 : 0);
  return y;
}

double train_accuracy(const MetaModel& m, const Rows& X, const std::vector<int>& y) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < X.size(); ++i) hit += m.label(X[i]) == y[i];
  return static_cast<double>(hit) / static_cast<double>(X.size());
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("logistic regression") {
  SUBCASE("separable 1-D data") {
    const Rows X{{-2}, {-1.5}, {-1}, {-0.5}, {0.5}, {1}, {1.5}, {2}};
    const std::vector<int> y{0, 0, 0, 0, 1, 1, 1, 1};
    CHECK(train_accuracy(*fit_logistic(X, y, 100.0), X, y) == 1.0);
  }
  SUBCASE("zero features recover the prior log-odds") {
    const Rows X(10, Row(3, 0.0));
    const std::vector<int> y{1, 1, 1, 0, 1, 0, 1, 1, 0, 1};
    const auto m = fit_logistic(X, y, 1.0);
    for (double w : m->weights) CHECK(std::fabs(w) < 1e-9);
    CHECK(m->intercept == doctest::Approx(std::log(7.0 / 3.0)).epsilon(1e-6));
  }
  SUBCASE("beats random weight vectors") {
    Rng rng(1);
    const auto X = random_rows(rng, 20, 6);
    std::vector<int> y;
    for (const auto& r : X) y.push_back(r[0] + 0.3 * rng.normal() > 0.5 ? 1 : 0);
    const double C = 10.0;
    const auto m = fit_logistic(X, y, C);
    const double best = logistic_objective(X, y, m->weights, m->intercept, C);
    for (int t = 0; t < 100; ++t) {
      std::vector<double> w(6);
      for (auto& v : w) v = 3.0 * rng.normal();
      CHECK(best >= logistic_objective(X, y, w, 3.0 * rng.normal(), C));
    }
  }
  CHECK(code_of([] { fit_logistic({{1.0}, {2.0}}, std::vector<int>{1, 1}, 1.0); }) == ErrorCode::SingleClassTraining);
}

TEST_CASE("knn") {
  Rng rng(2);
  const auto X = random_rows(rng, 15, 2);
  std::vector<int> y(15);
  for (auto& v : y) v = static_cast<int>(rng.index(2));

  const auto one = fit_knn(X, y, 1);
  for (std::size_t i = 0; i < 15; ++i) CHECK(one->label(X[i]) == y[i]);

  const auto all = fit_knn(X, y, 15);
  const auto ups = std::count(y.begin(), y.end(), 1);
  CHECK(all->label(Row{0.3, 0.3}) == (ups > 7 ? 1 : 0));

  const auto three = fit_knn(X, y, 3);
  for (int q = 0; q < 50; ++q) {
    const Row x{rng.uniform(), rng.uniform()};
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t i = 0; i < 15; ++i) d.push_back({std::hypot(X[i][0] - x[0], X[i][1] - x[1]), i});
    std::sort(d.begin(), d.end());
    int up = 0;
    for (int k = 0; k < 3; ++k) up += y[d[k].second];
    CHECK(three->score(x) == doctest::Approx(up / 3.0));
    CHECK(three->label(x) == (up >= 2 ? 1 : 0));
  }

  const Rows tie{{0.0}, {1.0}};
  CHECK(fit_knn(tie, std::vector<int>{1, 0}, 2)->label(Row{0.5}) == 0);
  CHECK(code_of([&] { fit_knn(X, y, 16); }) == ErrorCode::KTooLarge);
}

TEST_CASE("svm") {
  SUBCASE("rbf separates xor") {
    const Rows X{{0, 0}, {1, 1}, {0, 1}, {1, 0}};
    const std::vector<int> y{0, 0, 1, 1};
    const auto m = fit_svm(X, y, {KernelType::Rbf, 1.0, 2}, 10.0);
    CHECK(train_accuracy(*m, X, y) == 1.0);
  }
  SUBCASE("dual objective matches the exhaustive optimum") {
    Rng rng(3);
    for (int trial = 0; trial < 4; ++trial) {
      const auto X = random_rows(rng, 8, 2);
      const auto y = linear_labels(X);
      if (std::count(y.begin(), y.end(), 1) % 8 == 0) continue;
      const SvmKernel k{KernelType::Poly, 1.0, 1};
      const auto m = fit_svm(X, y, k, 10.0, 1e-6);
      const double oracle = exhaustive_dual(X, y, k, 10.0);
      CHECK(std::fabs(m->dual_objective - oracle) < 1e-3 * std::max(1.0, oracle));
    }
    const Rows X{{0.1, 0.9}, {0.5, 0.2}, {0.3, 0.7}, {0.8, 0.6}, {0.2, 0.1}, {0.9, 0.4}};
    const std::vector<int> y{1, 0, 1, 1, 0, 1};
    const SvmKernel rbf{KernelType::Rbf, 1.5, 2};
    CHECK(std::fabs(fit_svm(X, y, rbf, 1.0, 1e-6)->dual_objective - exhaustive_dual(X, y, rbf, 1.0)) < 1e-3);
  }
  SUBCASE("contradictory duplicates") {
    const Rows X{{0.5, 0.5}, {0.5, 0.5}, {0.0, 0.0}, {1.0, 1.0}};
    const std::vector<int> y{1, 0, 0, 1};
    const auto m = fit_svm(X, y, {KernelType::Rbf, 1.0, 2}, 1.0);
    for (double a : m->alpha) {
      CHECK(a >= 0.0);
      CHECK(a <= 1.0 + 1e-12);
    }
  }
  CHECK(code_of([] { fit_svm({{1.0}, {2.0}}, std::vector<int>{0, 0}, {}, 1.0); }) ==
        ErrorCode::SingleClassTraining);
}

TEST_CASE("forests") {
  SUBCASE("pure labels") {
    const Rows X{{0.1}, {0.4}, {0.9}};
    const auto m = fit_forest(X, std::vector<int>{1, 1, 1}, 1, ForestVariant::RF, 1);
    for (double q : {-5.0, 0.5, 7.0}) CHECK(m->label(Row{q}) == 1);
  }
  SUBCASE("planted rule, out of bag") {
    Rng rng(4);
    const auto X = random_rows(rng, 300, 6);
    std::vector<int> y;
    for (const auto& r : X) y.push_back(r[0] > 0.5 ? 1 : 0);
    const auto m = fit_forest(X, y, 25, ForestVariant::RF, 7);
    CHECK(m->oob_accuracy > 0.9);
    const auto et = fit_forest(X, y, 25, ForestVariant::ET, 7);
    const auto test = random_rows(rng, 200, 6);
    std::size_t hit = 0;
    for (const auto& r : test) hit += et->label(r) == (r[0] > 0.5 ? 1 : 0);
    CHECK(hit > 180);
  }
  SUBCASE("votes and determinism") {
    Rng rng(5);
    const auto X = random_rows(rng, 60, 6);
    const auto y = linear_labels(X);
    for (auto v : {ForestVariant::RF, ForestVariant::ET}) {
      const auto a = fit_forest(X, y, 15, v, 3), b = fit_forest(X, y, 15, v, 3);
      for (int q = 0; q < 30; ++q) {
        const Row x = random_rows(rng, 1, 6)[0];
        const auto votes = a->votes(x);
        CHECK(votes == b->votes(x));
        std::size_t up = 0;
        for (std::size_t t = 0; t < a->trees.size(); ++t) {
          CHECK(votes[t] == a->trees[t].predict(x));
          up += votes[t];
        }
        CHECK(a->score(x) == doctest::Approx(static_cast<double>(up) / 15.0));
        CHECK(a->label(x) == (up * 2 > 15 ? 1 : 0));
      }
    }
  }
  CHECK(gini(3, 4) == doctest::Approx(0.375));
  CHECK(gini(0, 5) == 0.0);
}

TEST_CASE("mlp") {
  SUBCASE("separable data") {
    Rng rng(6);
    const auto X = random_rows(rng, 80, 6);
    const auto y = linear_labels(X);
    MlpConfig cfg;
    cfg.epochs = 200;
    CHECK(train_accuracy(*fit_mlp(X, y, cfg, 2), X, y) == 1.0);
  }
  SUBCASE("constant labels") {
    Rng rng(7);
    const auto X = random_rows(rng, 30, 6);
    const auto m = fit_mlp(X, std::vector<int>(30, 0), {}, 1);
    for (const auto& r : random_rows(rng, 20, 6)) CHECK(m->label(r) == 0);
  }
  SUBCASE("gradient check on a 2-2-2-2 network") {
    Rng rng(8);
    MlpNet net(2, {2, 2, 2});
    net.initialize(rng);
    // Nonzero biases keep pre-activations off the ReLU kink at exactly 0.
    for (auto* p : net.parameters())
      if (p->value.rank() == 1)
        for (auto& v : p->value.values()) v = 0.5 + 0.1 * rng.normal();
    nn::Tensor x({6, 2});
    for (auto& v : x.values()) v = rng.normal();
    const std::vector<int> y{0, 1, 1, 0, 1, 0};
    auto params = net.parameters();
    for (auto* p : params) p->zero_grad();
    nn::Tensor g;
    nn::softmax_cross_entropy(net.forward(x), y, &g);
    net.backward(g);
    const auto r =
        nn::check_gradients(params, [&] { return nn::softmax_cross_entropy(net.forward(x), y, nullptr); });
    CHECK(r.checked == 6 + 6 + 6 + 6);
    CHECK(r.max_relative_error < 1e-4);
  }
  CHECK(code_of([] { fit_mlp({{1.0}}, std::vector<int>{1}, {}, 1); }) == ErrorCode::TooFewSamples);
}

TEST_CASE("every kind scores in [0,1] and labels by score") {
  Rng rng(9);
  const auto X = random_rows(rng, 60, 6);
  const auto y = linear_labels(X);
  MetaHyper h;
  h.rbf_C = 10.0;
  for (auto kind : kAllKinds) {
    const auto m = fit_kind(kind, X, y, h, 4);
    CHECK(m->kind() == kind);
    for (const auto& r : random_rows(rng, 40, 6)) {
      const double s = m->score(r);
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
      CHECK(m->label(r) == (s > 0.5 ? 1 : 0));
    }
  }
}

TEST_CASE("training row order does not matter") {
  Rng rng(10);
  const auto X = random_rows(rng, 40, 6);
  const auto y = linear_labels(X);
  std::vector<std::size_t> perm(40);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm);
  Rows PX;
  std::vector<int> py;
  for (auto i : perm) {
    PX.push_back(X[i]);
    py.push_back(y[i]);
  }
  const auto queries = random_rows(rng, 30, 6);
  for (auto kind : {Kind::LR, Kind::KNN, Kind::RbfSvm, Kind::PolySvm, Kind::ANN}) {
    const auto a = fit_kind(kind, X, y, {}, 3), b = fit_kind(kind, PX, py, {}, 3);
    for (const auto& q : queries) CHECK(a->score(q) == b->score(q));
  }
}
