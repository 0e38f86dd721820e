#include "tdse/er_fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tdse/error.hpp"

namespace tdse::er {

namespace {

constexpr double kMassTolerance = 1e-9;

bool in_unit(double v) { return std::isfinite(v) && v >= -kMassTolerance && v <= 1.0 + kMassTolerance; }

}  // namespace

void validate(const Evidence& e) {
  if (!in_unit(e.up) || !in_unit(e.down) || e.up + e.down > 1.0 + kMassTolerance) {
    throw Error(ErrorCode::InvalidMass,
                "belief (" + std::to_string(e.up) + ", " + std::to_string(e.down) + ") is not a valid mass");
  }
  if (!in_unit(e.weight) || !in_unit(e.reliability)) {
    throw Error(ErrorCode::InvalidMass, "weight and reliability must lie in [0, 1]");
  }
}

ProbabilityPair er_combine(std::span<const Evidence> evidence) {
  if (evidence.empty()) throw Error(ErrorCode::EmptyEvidenceList, "no evidence to combine");
  for (const auto& e : evidence) validate(e);

  // One active source: its normalized beliefs, without rounding through the recursion.
  const auto active = std::count_if(evidence.begin(), evidence.end(), [](const Evidence& e) { return e.weight > 0.0; });
  if (active == 1) {
    const auto& e = *std::find_if(evidence.begin(), evidence.end(), [](const Evidence& x) { return x.weight > 0.0; });
    const double s = e.up + e.down;
    if (!(s > 0.0)) return {};
    return {e.up / s, e.down / s};
  }

  // Combined masses on {Up}, {Down}, the frame, and the residual discount.
  double up = 0.0, down = 0.0, frame = 0.0, residual = 0.0;
  bool started = false;
  for (const auto& e : evidence) {
    if (e.weight <= 0.0) continue;
    const double w = e.weight, r = e.reliability;
    const double eu = w * e.up, ed = w * e.down, ef = w * (1.0 - e.up - e.down);
    if (!started) {
      const double c = 1.0 / (1.0 + w - r);
      up = c * eu;
      down = c * ed;
      frame = c * ef;
      residual = c * (1.0 - r);
      started = true;
      continue;
    }
    const double nu = (1.0 - r) * up + residual * eu + up * eu + up * ef + frame * eu;
    const double nd = (1.0 - r) * down + residual * ed + down * ed + down * ef + frame * ed;
    const double nf = (1.0 - r) * frame + residual * ef + frame * ef;
    const double np = (1.0 - r) * residual;
    const double total = nu + nd + nf + np;
    if (!(total > 0.0)) return {};
    up = nu / total;
    down = nd / total;
    frame = nf / total;
    residual = np / total;
  }
  const double s = up + down;
  if (!started || !(s > 0.0)) return {};
  return {up / s, down / s};
}

double clip_reliability(double accuracy) { return std::min(0.95, std::max(0.05, accuracy)); }

double estimate_reliability(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size()) {
    throw Error(ErrorCode::LengthMismatch, "predictions and labels differ in length");
  }
  if (actual.empty()) throw Error(ErrorCode::EmptyValidation, "validation segment is empty");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) hit += predicted[i] == actual[i];
  return clip_reliability(static_cast<double>(hit) / static_cast<double>(actual.size()));
}

ProbabilityPair fuse_providers(std::span<const ProbabilityPair> outputs, std::span<const double> weights,
                               std::span<const double> reliabilities) {
  if (outputs.size() != weights.size() || outputs.size() != reliabilities.size()) {
    throw Error(ErrorCode::LengthMismatch, "provider outputs, weights and reliabilities differ in count");
  }
  if (outputs.empty()) throw Error(ErrorCode::EmptyEvidenceList, "no provider outputs to fuse");
  double total = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) total += weights[i] * reliabilities[i];
  std::vector<Evidence> evidence;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const double w = total > 0.0 ? weights[i] * reliabilities[i] / total : 1.0 / static_cast<double>(outputs.size());
    evidence.push_back({outputs[i].up, outputs[i].down, w, reliabilities[i]});
  }
  return er_combine(evidence);
}

}  // namespace tdse::er
