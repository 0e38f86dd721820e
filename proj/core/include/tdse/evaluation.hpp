#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace tdse::eval {

/// Labels are 1 = Up, 0 = Down.
struct ConfusionCounts {
  std::size_t tu = 0;  // predicted Up, actual Up
  std::size_t td = 0;  // predicted Down, actual Down
  std::size_t fu = 0;  // predicted Up, actual Down
  std::size_t fd = 0;  // predicted Down, actual Up

  std::size_t total() const { return tu + td + fu + fd; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(std::span<const int> predicted, std::span<const int> actual);

/// Precision is unset when nothing was predicted Up, recall when nothing was
/// actually Up; F needs both and a positive sum.
struct MetricReport {
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f_measure;
  std::optional<double> auc;
};

MetricReport metrics(const ConfusionCounts& counts);

/// Area under the ROC curve swept over distinct scores (trapezoids), which is
/// the tie-adjusted Mann-Whitney statistic.
double auc(std::span<const double> scores, std::span<const int> actual);

struct TTest {
  double t = 0.0;
  double p = 1.0;
  std::size_t df = 0;
};

/// Two-sided paired t-test on a - b.
TTest paired_t_test(std::span<const double> a, std::span<const double> b);

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);
/// P(T <= t) for Student's t with `df` degrees of freedom.
double student_t_cdf(double t, double df);

struct WindowReport {
  std::size_t window = 0;
  std::size_t samples = 0;
  MetricReport metrics;
};

/// Mean of each metric over the windows where it is defined.
struct MeanReport {
  MetricReport metrics;
  std::size_t undefined_precision = 0;
  std::size_t undefined_recall = 0;
  std::size_t undefined_f = 0;
  std::size_t undefined_auc = 0;
};

MeanReport mean_report(std::span<const WindowReport> windows);

/// Scores the predictions and, when both classes are present, the AUC.
MetricReport evaluate(std::span<const int> predicted, std::span<const double> scores, std::span<const int> actual);

/// `window,samples,accuracy,precision,recall,f_measure,auc` with a final
/// `mean` row; undefined entries are written as `NA`.
void write_report_csv(std::ostream& out, std::span<const WindowReport> windows);
void write_report_json(std::ostream& out, std::span<const WindowReport> windows);

}  // namespace tdse::eval
