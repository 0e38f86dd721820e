#include <doctest.h>

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "tdse/error.hpp"
#include "tdse/evaluation.hpp"
#include "tdse/rng.hpp"
#include "oracles.hpp"

using namespace tdse;
using namespace tdse::eval;
using namespace oracles;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("confusion counts") {
  const std::vector<int> up(7, 1);
  CHECK(confusion(up, up) == ConfusionCounts{7, 0, 0, 0});

  Rng rng(1);
  std::vector<int> p(50), a(50), inv(50);
  ConfusionCounts tally;
  for (std::size_t i = 0; i < 50; ++i) {
    p[i] = static_cast<int>(rng.index(2));
    a[i] = static_cast<int>(rng.index(2));
    inv[i] = 1 - p[i];
    if (p[i] && a[i]) ++tally.tu;
    if (!p[i] && !a[i]) ++tally.td;
    if (p[i] && !a[i]) ++tally.fu;
    if (!p[i] && a[i]) ++tally.fd;
  }
  const auto c = confusion(p, a);
  CHECK(c == tally);
  const auto ci = confusion(inv, a);
  CHECK(ci.tu == c.fd);
  CHECK(ci.fd == c.tu);
  CHECK(ci.td == c.fu);
  CHECK(ci.fu == c.td);

  std::size_t correct = 0;
  for (std::size_t i = 0; i < 50; ++i) correct += p[i] == a[i];
  CHECK(metrics(c).accuracy == static_cast<double>(correct) / 50.0);

  auto rp = p, ra = a;
  std::vector<std::size_t> perm(50);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm);
  for (std::size_t i = 0; i < 50; ++i) {
    rp[i] = p[perm[i]];
    ra[i] = a[perm[i]];
  }
  CHECK(confusion(rp, ra) == c);

  CHECK(code_of([] { confusion(std::vector<int>{1}, std::vector<int>{1, 0}); }) == ErrorCode::LengthMismatch);
  CHECK(code_of([] { confusion(std::vector<int>{}, std::vector<int>{}); }) == ErrorCode::Empty);
}

TEST_CASE("metric formulas") {
  const auto m = metrics({40, 30, 20, 10});
  CHECK(std::fabs(m.accuracy - 0.7) < 1e-9);
  CHECK(std::fabs(*m.recall - 0.8) < 1e-9);
  CHECK(std::fabs(*m.precision - 2.0 / 3.0) < 1e-9);
  CHECK(std::fabs(*m.f_measure - 16.0 / 22.0) < 1e-9);
  const auto even = metrics({5, 5, 5, 5});
  CHECK(even.accuracy == 0.5);
  CHECK(*even.precision == 0.5);
  CHECK(*even.recall == 0.5);
  CHECK(*even.f_measure == 0.5);
  const auto none = metrics({0, 6, 0, 4});
  CHECK_FALSE(none.precision.has_value());
  CHECK(*none.recall == 0.0);
  CHECK_FALSE(none.f_measure.has_value());
  CHECK_FALSE(metrics({0, 6, 2, 0}).recall.has_value());
}

TEST_CASE("auc") {
  CHECK(auc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<int>{1, 1, 0, 0}) == 1.0);
  CHECK(auc(std::vector<double>(6, 0.3), std::vector<int>{1, 0, 1, 0, 0, 1}) == 0.5);
  CHECK(code_of([] { auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}); }) == ErrorCode::SingleClassLabels);
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(12), flipped(12);
    std::vector<int> y(12);
    for (std::size_t i = 0; i < 12; ++i) {
      s[i] = std::round(rng.uniform() * 6.0) / 6.0;
      flipped[i] = 1.0 - s[i];
      y[i] = static_cast<int>(i % 2 == 0 ? 1 : rng.index(2));
    }
    y[1] = 0;
    CHECK(std::fabs(auc(s, y) - pair_count_auc(s, y)) < 1e-12);
    CHECK(std::fabs(auc(flipped, y) - (1.0 - auc(s, y))) < 1e-12);
  }
}

TEST_CASE("student t") {
  // Two-sided critical values from a printed t-table, df = 9.
  const double table[][2] = {{1.833, 0.10}, {2.262, 0.05}, {2.821, 0.02}, {3.250, 0.01}, {4.781, 0.001}};
  for (const auto& [t, p] : table) CHECK(std::fabs(2.0 * (1.0 - student_t_cdf(t, 9)) - p) < 1e-4);

  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double df = 1.0 + static_cast<double>(rng.index(40));
    const double t = 6.0 * rng.normal();
    const boost::math::students_t dist(df);
    CHECK(std::fabs(student_t_cdf(t, df) - boost::math::cdf(dist, t)) < 1e-8);
  }
  CHECK(incomplete_beta(2.0, 3.0, 0.4) == doctest::Approx(0.5248).epsilon(1e-12));
}

TEST_CASE("paired t-test") {
  const std::vector<double> a{1, 2, 3}, same{1, 2, 3};
  CHECK(code_of([&] { paired_t_test(a, same); }) == ErrorCode::ZeroVariance);
  CHECK(code_of([&] { paired_t_test(a, std::vector<double>{1, 2}); }) == ErrorCode::LengthMismatch);
  const std::vector<double> d1{1, 0, 1, 0}, d2{0, 1, 0, 1};
  const auto z = paired_t_test(d1, d2);
  CHECK(z.t == 0.0);
  CHECK(z.p == 1.0);

  const std::vector<double> x{0.64, 0.61, 0.66, 0.63, 0.60, 0.67, 0.62, 0.65, 0.63, 0.66};
  const std::vector<double> y{0.55, 0.57, 0.58, 0.52, 0.56, 0.59, 0.54, 0.60, 0.53, 0.58};
  const auto r = paired_t_test(x, y);
  double md = 0.0, sd = 0.0;
  for (std::size_t i = 0; i < 10; ++i) md += (x[i] - y[i]) / 10.0;
  for (std::size_t i = 0; i < 10; ++i) sd += std::pow(x[i] - y[i] - md, 2) / 9.0;
  const double t = md / std::sqrt(sd / 10.0);
  CHECK(r.t == doctest::Approx(t).epsilon(1e-12));
  CHECK(r.df == 9);
  const boost::math::students_t dist(9);
  CHECK(std::fabs(r.p - 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)))) < 1e-8);
}

TEST_CASE("window reports") {
  std::vector<WindowReport> w;
  w.push_back({1, 10, evaluate(std::vector<int>{1, 1, 0, 0}, std::vector<double>{0.9, 0.6, 0.4, 0.2},
                               std::vector<int>{1, 0, 0, 0})});
  w.push_back({2, 10, evaluate(std::vector<int>{0, 0}, std::vector<double>{0.1, 0.2}, std::vector<int>{0, 0})});
  const auto m = mean_report(w);
  CHECK(m.metrics.accuracy == doctest::Approx((0.75 + 1.0) / 2));
  CHECK(m.undefined_precision == 1);
  CHECK(m.undefined_auc == 1);
  CHECK(*m.metrics.auc == 1.0);
  std::ostringstream out;
  write_report_csv(out, w);
  const auto text = out.str();
  CHECK(text.rfind("window,samples,accuracy,precision,recall,f_measure,auc\n", 0) == 0);
  CHECK(text.find("NA") != std::string::npos);
  CHECK(text.find("\nmean,") != std::string::npos);
}
