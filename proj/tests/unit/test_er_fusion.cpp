#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "tdse/er_fusion.hpp"
#include "tdse/error.hpp"
#include "tdse/rng.hpp"
#include "oracles.hpp"

using namespace tdse;
using namespace tdse::er;
using namespace oracles;

namespace {

Evidence random_evidence(Rng& rng) {
  const double a = rng.uniform(), b = rng.uniform() * (1.0 - a);
  return {a, b, 0.1 + 0.9 * rng.uniform(), 0.05 + 0.9 * rng.uniform()};
}

}  // namespace

TEST_CASE("single evidence is returned unchanged") {
  const std::vector<Evidence> e{{0.7, 0.3, 1.0, 1.0}};
  const auto p = er_combine(e);
  CHECK(p.up == 0.7);
  CHECK(p.down == 0.3);
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    const double up = rng.uniform();
    const double down = 1.0 - up;
    if (up + down != 1.0) continue;
    // Weight, reliability and inactive sources do not matter.
    const std::vector<Evidence> one{{0.2, 0.3, 0.0, 0.5}, {up, down, 0.1 + 0.9 * rng.uniform(), rng.uniform()}};
    const auto q = er_combine(one);
    CHECK(q.up == up);
    CHECK(q.down == down);
  }
}

TEST_CASE("agreeing evidence") {
  // Symmetric and certain beliefs are fixed points; any other agreement is
  // reinforced towards the shared majority.
  const std::vector<Evidence> sym{{0.5, 0.5, 0.5, 0.8}, {0.5, 0.5, 0.5, 0.8}};
  CHECK(er_combine(sym).up == doctest::Approx(0.5).epsilon(1e-15));
  const std::vector<Evidence> sure{{1.0, 0.0, 0.5, 0.8}, {1.0, 0.0, 0.5, 0.8}};
  CHECK(er_combine(sure).up == 1.0);
  const std::vector<Evidence> lean{{0.7, 0.3, 0.5, 0.8}, {0.7, 0.3, 0.5, 0.8}};
  const auto p = er_combine(lean);
  CHECK(p.up > 0.7);
  CHECK(p.up == doctest::Approx(er_oracle(lean).up).epsilon(1e-13));
}

TEST_CASE("two opposing evidences, hand executed") {
  // e1 = (0.45, 0.05) with residual 0.5 after scaling; e2 contributes
  // (0.1, 0.4). Up = 0.32, Down = 0.245 before normalization.
  const std::vector<Evidence> e{{0.9, 0.1, 0.5, 0.5}, {0.2, 0.8, 0.5, 0.5}};
  const auto p = er_combine(e);
  CHECK(p.up == doctest::Approx(64.0 / 113.0).epsilon(1e-14));
  CHECK(p.up == doctest::Approx(er_oracle(e).up).epsilon(1e-14));
}

TEST_CASE("matches the set-based oracle") {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Evidence> e;
    for (std::size_t i = 0, n = 1 + rng.index(6); i < n; ++i) e.push_back(random_evidence(rng));
    const auto p = er_combine(e);
    const auto q = er_oracle(e);
    CHECK(std::fabs(p.up - q.up) < 1e-12);
    CHECK(std::fabs(p.up + p.down - 1.0) < 1e-12);
    CHECK(p.up >= 0.0);
    CHECK(p.up <= 1.0);
  }
}

TEST_CASE("order does not matter") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Evidence> e;
    for (std::size_t i = 0; i < 5; ++i) e.push_back(random_evidence(rng));
    const auto base = er_combine(e);
    auto shuffled = e;
    rng.shuffle(shuffled);
    CHECK(std::fabs(er_combine(shuffled).up - base.up) < 1e-10);
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(std::fabs(er_combine(shuffled).up - base.up) < 1e-10);
  }
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(er_combine({}), Error);
  const std::vector<Evidence> bad{{0.8, 0.4, 1.0, 1.0}};
  try {
    er_combine(bad);
    FAIL("expected InvalidMass");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::InvalidMass);
  }
  CHECK_THROWS_AS(estimate_reliability(std::vector<int>{}, std::vector<int>{}), Error);
}

TEST_CASE("reliability estimate") {
  const std::vector<int> y{1, 0, 1, 1, 0};
  CHECK(estimate_reliability(y, y) == 0.95);
  Rng rng(3);
  std::vector<int> pred(20000), actual(20000);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i] = static_cast<int>(rng.index(2));
    actual[i] = static_cast<int>(rng.index(2));
  }
  CHECK(std::fabs(estimate_reliability(pred, actual) - 0.5) < 0.02);
}

TEST_CASE("provider fusion") {
  const std::vector<ProbabilityPair> flat(5, {0.5, 0.5});
  const std::vector<double> w(5, 0.2), r{0.6, 0.7, 0.8, 0.55, 0.9};
  CHECK(fuse_providers(flat, w, r).up == doctest::Approx(0.5).epsilon(1e-15));

  const std::vector<ProbabilityPair> out{{0.8, 0.2}, {0.3, 0.7}, {0.6, 0.4}, {0.55, 0.45}, {0.1, 0.9}};
  SUBCASE("a provider with vanishing reliability drops out") {
    auto rr = r;
    rr[4] = 1e-7;
    const auto five = fuse_providers(out, w, rr);
    const std::vector<ProbabilityPair> four(out.begin(), out.begin() + 4);
    const std::vector<double> w4(4, 0.25), r4(r.begin(), r.begin() + 4);
    CHECK(std::fabs(five.up - fuse_providers(four, w4, r4).up) < 1e-3);
  }
  SUBCASE("permuting providers") {
    const auto base = fuse_providers(out, w, r);
    std::array<std::size_t, 5> perm{0, 1, 2, 3, 4};
    while (std::next_permutation(perm.begin(), perm.end())) {
      std::vector<ProbabilityPair> po;
      std::vector<double> pw, pr;
      for (auto i : perm) {
        po.push_back(out[i]);
        pw.push_back(w[i]);
        pr.push_back(r[i]);
      }
      CHECK(std::fabs(fuse_providers(po, pw, pr).up - base.up) < 1e-12);
    }
  }
}
