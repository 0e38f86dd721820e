#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "fixtures.hpp"
#include "tdse/error.hpp"

using namespace tdse;
using namespace tdse::data;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

MarketSeries parse(const std::string& text) {
  std::istringstream in(text);
  return parse_ohlcv_csv(in, "X");
}

const char* kHeader = "date,open,high,low,close,volume,value\n";

}  // namespace

TEST_CASE("ohlcv csv parsing") {
  const auto s = parse(std::string(kHeader) + "2020-01-02,1,2,0.5,1.5,10,15\n2020-01-03,1.5,2,1,1.8,11,20\n");
  CHECK(s.size() == 2);
  CHECK(s.rows[1].close == 1.8);

  CHECK(code_of([] { parse(std::string(kHeader) + "2020-01-02,1,2,0.5,0,10,15\n"); }) ==
        ErrorCode::NonPositivePrice);
  CHECK(code_of([] { parse(std::string(kHeader) + "2020-01-02,1,2,0.5,1,10,15\n2020-01-02,1,2,0.5,1,10,15\n"); }) ==
        ErrorCode::DuplicateDate);
  CHECK(code_of([] { parse(std::string(kHeader) + "2020-01-02,1,2,0.5\n"); }) == ErrorCode::MalformedRow);

  SUBCASE("shuffled dates come back sorted") {
    const auto sorted = parse(std::string(kHeader) + "2020-01-02,1,2,0.5,1.5,10,15\n2020-01-03,1,2,0.5,1.6,10,15\n" +
                              "2020-01-06,1,2,0.5,1.7,10,15\n");
    const auto shuffled = parse(std::string(kHeader) + "2020-01-06,1,2,0.5,1.7,10,15\n2020-01-02,1,2,0.5,1.5,10,15\n" +
                                "2020-01-03,1,2,0.5,1.6,10,15\n");
    CHECK(sorted == shuffled);
  }
  SUBCASE("write then parse is the identity") {
    const auto s0 = fixtures::series("X", fixtures::weekdays("2021-03-01", 20), fixtures::random_walk(20, 5));
    std::ostringstream out;
    write_ohlcv_csv(out, s0);
    CHECK(parse(out.str()) == s0);
  }
}

TEST_CASE("returns") {
  MarketSeries s;
  s.rows.push_back({parse_date("2020-01-02"), 100, 106, 99, 105, 1, 1});
  CHECK(compute_returns(s, ReturnKind::OpenToClose).values[0].value == doctest::Approx(0.05).epsilon(1e-15));
  CHECK_THROWS_AS(compute_returns(s, ReturnKind::CloseToClose), Error);

  const auto flat = fixtures::series("F", fixtures::weekdays("2020-01-01", 6), std::vector<double>(6, 7.0));
  for (const auto& p : compute_returns(flat, ReturnKind::CloseToClose).values) CHECK(p.value == 0.0);

  Rng rng(3);
  MarketSeries r;
  const auto dates = fixtures::weekdays("2020-02-03", 10);
  for (std::size_t i = 0; i < 10; ++i) {
    const double open = 50 + 10 * rng.uniform(), close = 50 + 10 * rng.uniform();
    r.rows.push_back({dates[i], open, std::max(open, close) + 1, std::min(open, close) - 1, close, 1, 1});
  }
  const auto oc = compute_returns(r, ReturnKind::OpenToClose);
  const auto cc = compute_returns(r, ReturnKind::CloseToClose);
  const auto co = compute_returns(r, ReturnKind::CloseToOpen);
  REQUIRE(oc.values.size() == 10);
  REQUIRE(cc.values.size() == 9);
  REQUIRE(co.values.size() == 9);
  for (std::size_t t = 1; t < 10; ++t) {
    const double cct = r.rows[t].close / r.rows[t - 1].close - 1.0;
    const double cot = r.rows[t].open / r.rows[t - 1].close - 1.0;
    const double oct = r.rows[t].close / r.rows[t].open - 1.0;
    CHECK(cc.values[t - 1].value == doctest::Approx(cct).epsilon(1e-14));
    CHECK(co.values[t - 1].value == doctest::Approx(cot).epsilon(1e-14));
    CHECK(oc.values[t].value == doctest::Approx(oct).epsilon(1e-14));
    CHECK(std::fabs((1 + co.values[t - 1].value) * (1 + oc.values[t].value) - (1 + cc.values[t - 1].value)) < 1e-12);
  }
}

TEST_CASE("labels") {
  const auto d = fixtures::weekdays("2020-01-01", 2);
  auto l = make_labels(fixtures::series("A", d, {10, 11}));
  REQUIRE(l.size() == 1);
  CHECK(l[0].direction == Direction::Up);
  CHECK(l[0].raw_return == doctest::Approx(0.1));
  CHECK(make_labels(fixtures::series("A", d, {10, 10}))[0].direction == Direction::Down);
  CHECK(make_labels(fixtures::series("A", d, {10, 10}), TieRule::ZeroIsUp)[0].direction == Direction::Up);

  const auto closes = fixtures::random_walk(30, 8);
  const auto labels = make_labels(fixtures::series("A", fixtures::weekdays("2020-01-01", 30), closes));
  CHECK(labels.size() == 29);
  std::size_t ups = 0, expected = 0;
  for (const auto& x : labels) ups += x.direction == Direction::Up;
  for (std::size_t t = 1; t < 30; ++t) expected += closes[t] > closes[t - 1];
  CHECK(ups == expected);
}

namespace {

std::vector<Date> month_calendar(int months) {
  std::vector<Date> out;
  const Date start = parse_date("2019-01-01");
  for (Date d = start; month_index(d) < month_index(start) + months; d += std::chrono::days{1}) {
    const std::chrono::weekday wd{d};
    if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) out.push_back(d);
  }
  return out;
}

int month_of(const std::vector<Date>& cal, std::size_t i) { return month_index(cal[i]) - month_index(cal[0]) + 1; }

}  // namespace

TEST_CASE("sliding windows") {
  const auto cal = month_calendar(31);
  const auto w = build_windows(cal, {});
  REQUIRE(w.size() == 10);
  CHECK(month_of(cal, w[0].test.begin) == 12);
  CHECK(month_of(cal, w[0].test.end - 1) == 14);
  CHECK(w[9].test.end == cal.size());
  CHECK(month_of(cal, w[9].test.begin) == 29);
  // Month arithmetic oracle: start month of window k is round(k * 17 / 9).
  for (std::size_t k = 0; k < 10; ++k) {
    const int start = static_cast<int>(std::floor(static_cast<double>(k) * 17.0 / 9.0 + 0.5)) + 1;
    CHECK(month_of(cal, w[k].extractor_train.begin) == start);
  }
  for (std::size_t k = 0; k < w.size(); ++k) {
    CHECK(w[k].extractor_train.end == w[k].meta_train.begin);
    CHECK(w[k].meta_train.end == w[k].test.begin);
    CHECK(w[k].extractor_train.size() > w[k].meta_train.size());
    if (k > 0) CHECK(w[k].scored.begin == w[k - 1].scored.end);
  }

  const auto one = build_windows(month_calendar(14), {1, 11, 3, 0.8});
  REQUIRE(one.size() == 1);
  CHECK(one[0].test.end == month_calendar(14).size());
  CHECK(code_of([] { build_windows(month_calendar(13), {2, 11, 3, 0.8}); }) == ErrorCode::InsufficientHistory);
}

TEST_CASE("feature assembly") {
  SUBCASE("six days with industry lag 5 give one sample") {
    const auto ds = fixtures::small_dataset(6);
    const auto m = assemble_features(ds, {1, 5, 1, 1});
    CHECK(m.size() == 1);
  }
  SUBCASE("lag 1 everywhere on three days gives two samples") {
    const auto ds = fixtures::small_dataset(3);
    CHECK(assemble_features(ds, {1, 1, 1, 1}).size() == 2);
  }
  SUBCASE("a missing global day drops its sample under drop") {
    const auto dates = fixtures::weekdays("2020-01-01", 8);
    auto ds = fixtures::small_dataset(8);
    const auto full = assemble_features(ds, {1, 1, 1, 1}).size();
    ds.global[0].values[3] = std::nullopt;
    const auto m = assemble_features(ds, {1, 1, 1, 1});
    CHECK(m.size() == full - 1);
    CHECK(std::find(m.day.begin(), m.day.end(), 4u) == m.day.end());
  }
  SUBCASE("features never look ahead") {
    const auto ds = fixtures::small_dataset(40);
    const auto m = assemble_features(ds, {2, 5, 3, 3});
    for (std::size_t i = 0; i < m.size(); ++i) {
      CHECK(m.latest_feature_date[i] < m.label_date[i]);
      CHECK(m.earliest_feature_date[i] <= m.latest_feature_date[i]);
    }
  }
}

TEST_CASE("ffill alignment carries the last observation") {
  const auto cal = fixtures::weekdays("2020-01-01", 5);
  ReturnSeries r;
  r.values = {{cal[0], 0.1}, {cal[2], 0.3}};
  std::size_t filled = 0;
  const auto f = align_to_calendar(cal, r, MissingPolicy::Ffill, &filled);
  CHECK(*f[1] == 0.1);
  CHECK(*f[4] == 0.3);
  CHECK(filled == 3);
  const auto d = align_to_calendar(cal, r, MissingPolicy::Drop);
  CHECK(!d[1]);
}

TEST_CASE("branch config round trip") {
  std::istringstream in(
      "# regions\n[Asia]\nsymbols = N225, HSI\nreturns = CloseToClose\n[Europe]\nsymbols = FTSE\nreturns = "
      "OpenToClose\n[Americas]\nsymbols = SPX\n[Target]\nsymbols = SSEC\n[Pre]\nsymbols = A50\nreturns = "
      "CloseToOpen\n");
  const auto b = parse_branch_config(in);
  REQUIRE(b.size() == 5);
  CHECK(b[0].symbols == std::vector<std::string>{"N225", "HSI"});
  CHECK(b[1].return_kind == ReturnKind::OpenToClose);
  std::ostringstream out;
  write_branch_config(out, b);
  std::istringstream again(out.str());
  const auto b2 = parse_branch_config(again);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(b2[i].symbols == b[i].symbols);
    CHECK(b2[i].return_kind == b[i].return_kind);
  }
  std::istringstream dup("[Asia]\nsymbols = A\n[Europe]\nsymbols = A\n[Americas]\nsymbols = B\n[Target]\nsymbols = "
                         "C\n[Pre]\nsymbols = D\n");
  CHECK_THROWS_AS(parse_branch_config(dup), Error);
}
