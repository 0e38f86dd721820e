#include "tdse/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "tdse/csv.hpp"
#include "tdse/error.hpp"

namespace tdse::eval {

ConfusionCounts confusion(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size()) {
    throw Error(ErrorCode::LengthMismatch, "confusion: " + std::to_string(predicted.size()) + " predictions vs " +
                                               std::to_string(actual.size()) + " labels");
  }
  if (predicted.empty()) throw Error(ErrorCode::Empty, "confusion: no samples");
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool up = predicted[i] != 0;
    const bool real_up = actual[i] != 0;
    if (up && real_up) ++c.tu;
    else if (!up && !real_up) ++c.td;
    else if (up) ++c.fu;
    else ++c.fd;
  }
  return c;
}

MetricReport metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error(ErrorCode::Empty, "metrics: no samples");
  MetricReport r;
  r.accuracy = static_cast<double>(c.tu + c.td) / static_cast<double>(c.total());
  if (c.tu + c.fu > 0) r.precision = static_cast<double>(c.tu) / static_cast<double>(c.tu + c.fu);
  if (c.tu + c.fd > 0) r.recall = static_cast<double>(c.tu) / static_cast<double>(c.tu + c.fd);
  if (r.precision && r.recall && *r.precision + *r.recall > 0.0) {
    r.f_measure = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
  }
  return r;
}

double auc(std::span<const double> scores, std::span<const int> actual) {
  if (scores.size() != actual.size()) throw Error(ErrorCode::LengthMismatch, "auc: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  const double pos = static_cast<double>(std::count_if(actual.begin(), actual.end(), [](int v) { return v != 0; }));
  const double neg = static_cast<double>(actual.size()) - pos;
  if (pos == 0.0 || neg == 0.0) throw Error(ErrorCode::SingleClassLabels, "auc needs both Up and Down labels");

  // Lower the threshold one distinct score at a time.
  double area = 0.0;
  double tp = 0.0;
  double fp = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    double dtp = 0.0;
    double dfp = 0.0;
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      (actual[order[i]] != 0 ? dtp : dfp) += 1.0;
    }
    area += dfp * (tp + tp + dtp) / 2.0;
    tp += dtp;
    fp += dfp;
  }
  return area / (pos * neg);
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(b, a, 1.0 - x);

  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double f = d;
  for (int m = 1; m <= 10000; ++m) {
    const double mm = m;
    double num = mm * (b - mm) * x / ((a + 2 * mm - 1) * (a + 2 * mm));
    d = 1.0 + num * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    f *= d * c;
    num = -(a + mm) * (a + b + mm) * x / ((a + 2 * mm) * (a + 2 * mm + 1));
    d = 1.0 + num * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    f *= delta;
    if (std::fabs(delta - 1.0) < eps) break;
  }
  return std::exp(log_front) * f / a;
}

double student_t_cdf(double t, double df) {
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
  return t > 0 ? 1.0 - tail : tail;
}

TTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "paired t-test: length mismatch");
  if (a.size() < 2) throw Error(ErrorCode::TooFewSamples, "paired t-test needs at least 2 pairs");
  const auto n = static_cast<double>(a.size());
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) throw Error(ErrorCode::ZeroVariance, "paired t-test: differences have zero variance");
  TTest r;
  r.df = a.size() - 1;
  r.t = mean / (sd / std::sqrt(n));
  const auto df = static_cast<double>(r.df);
  r.p = std::min(1.0, incomplete_beta(df / 2.0, 0.5, df / (df + r.t * r.t)));
  return r;
}

MetricReport evaluate(std::span<const int> predicted, std::span<const double> scores, std::span<const int> actual) {
  MetricReport r = metrics(confusion(predicted, actual));
  const bool up = std::any_of(actual.begin(), actual.end(), [](int v) { return v != 0; });
  const bool down = std::any_of(actual.begin(), actual.end(), [](int v) { return v == 0; });
  if (up && down) r.auc = auc(scores, actual);
  return r;
}

MeanReport mean_report(std::span<const WindowReport> windows) {
  MeanReport m;
  if (windows.empty()) return m;
  const auto average = [&](auto get, std::size_t& undefined) -> std::optional<double> {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& w : windows) {
      if (const std::optional<double> v = get(w.metrics)) {
        sum += *v;
        ++n;
      } else {
        ++undefined;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  std::size_t none = 0;
  m.metrics.accuracy = *average([](const MetricReport& r) { return std::optional<double>(r.accuracy); }, none);
  m.metrics.precision = average([](const MetricReport& r) { return r.precision; }, m.undefined_precision);
  m.metrics.recall = average([](const MetricReport& r) { return r.recall; }, m.undefined_recall);
  m.metrics.f_measure = average([](const MetricReport& r) { return r.f_measure; }, m.undefined_f);
  m.metrics.auc = average([](const MetricReport& r) { return r.auc; }, m.undefined_auc);
  return m;
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? csv::format_double(*v) : "NA"; }

nlohmann::ordered_json metric_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  const auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
    else j[key] = nullptr;
  };
  j["accuracy"] = r.accuracy;
  put("precision", r.precision);
  put("recall", r.recall);
  put("f_measure", r.f_measure);
  put("auc", r.auc);
  return j;
}

}  // namespace

void write_report_csv(std::ostream& out, std::span<const WindowReport> windows) {
  out << "window,samples,accuracy,precision,recall,f_measure,auc\n";
  std::size_t samples = 0;
  for (const auto& w : windows) {
    out << w.window << ',' << w.samples << ',' << csv::format_double(w.metrics.accuracy) << ','
        << cell(w.metrics.precision) << ',' << cell(w.metrics.recall) << ',' << cell(w.metrics.f_measure) << ','
        << cell(w.metrics.auc) << '\n';
    samples += w.samples;
  }
  const MeanReport m = mean_report(windows);
  out << "mean," << samples << ',' << csv::format_double(m.metrics.accuracy) << ',' << cell(m.metrics.precision)
      << ',' << cell(m.metrics.recall) << ',' << cell(m.metrics.f_measure) << ',' << cell(m.metrics.auc) << '\n';
}

void write_report_json(std::ostream& out, std::span<const WindowReport> windows) {
  nlohmann::ordered_json j;
  j["windows"] = nlohmann::ordered_json::array();
  for (const auto& w : windows) {
    auto row = metric_json(w.metrics);
    row["window"] = w.window;
    row["samples"] = w.samples;
    j["windows"].push_back(row);
  }
  const MeanReport m = mean_report(windows);
  auto mean = metric_json(m.metrics);
  mean["undefined"] = {{"precision", m.undefined_precision},
                       {"recall", m.undefined_recall},
                       {"f_measure", m.undefined_f},
                       {"auc", m.undefined_auc}};
  j["mean"] = mean;
  out << j.dump(2) << '\n';
}

}  // namespace tdse::eval
