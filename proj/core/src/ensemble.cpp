#include "tdse/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "tdse/csv.hpp"
#include "tdse/error.hpp"
#include "tdse/parallel.hpp"

namespace tdse::ensemble {

meta::Rows stack_features(std::span<const ProbabilityPair> global, std::span<const ProbabilityPair> industry,
                          std::span<const ProbabilityPair> media) {
  if (global.size() != industry.size() || global.size() != media.size()) {
    throw Error(ErrorCode::LengthMismatch, "probability streams differ in length: " + std::to_string(global.size()) +
                                               ", " + std::to_string(industry.size()) + ", " +
                                               std::to_string(media.size()));
  }
  meta::Rows rows;
  rows.reserve(global.size());
  for (std::size_t i = 0; i < global.size(); ++i) {
    rows.push_back({global[i].up, global[i].down, industry[i].up, industry[i].down, media[i].up, media[i].down});
  }
  return rows;
}

std::optional<FitCache::Entry> FitCache::find(const std::string& key) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void FitCache::store(const std::string& key, Entry entry) {
  std::lock_guard lock(mutex_);
  entries_.emplace(key, std::move(entry));
}

std::size_t FitCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

ScheduleEntry select_meta(std::size_t window, const meta::Rows& X, std::span<const int> y,
                          const meta::MetaHyper& hyper, std::uint64_t seed, FitCache* cache, std::size_t workers) {
  if (X.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "meta-train rows and labels differ in count");
  const auto up = std::count(y.begin(), y.end(), 1);
  if (up == 0 || up == static_cast<std::ptrdiff_t>(y.size())) {
    throw Error(ErrorCode::SingleClassTraining,
                "window " + std::to_string(window) + ": meta-train segment contains a single class");
  }
  const auto cut = static_cast<std::size_t>(std::floor(static_cast<double>(X.size()) * 0.8));
  if (cut == 0 || cut == X.size()) {
    throw Error(ErrorCode::EmptyValidation, "window " + std::to_string(window) + ": meta-train segment too short");
  }
  const meta::Rows fit_X(X.begin(), X.begin() + static_cast<std::ptrdiff_t>(cut));
  const std::vector<int> fit_y(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(cut));
  const meta::Rows val_X(X.begin() + static_cast<std::ptrdiff_t>(cut), X.end());
  const std::vector<int> val_y(y.begin() + static_cast<std::ptrdiff_t>(cut), y.end());

  ScheduleEntry entry;
  entry.window = window;
  std::array<meta::ModelPtr, kCandidateCount> models;
  const std::uint64_t window_seed = derive_seed(seed, {window});
  parallel_for(kCandidateCount, workers, [&](std::size_t c) {
    const meta::Kind kind = meta::kAllKinds[c];
    const std::string key = std::to_string(window) + "|" + meta::hyper_key(kind, hyper);
    FitCache::Entry fitted;
    if (auto hit = cache ? cache->find(key) : std::nullopt) {
      fitted = *hit;
    } else {
      try {
        fitted.model = meta::fit_kind(kind, fit_X, fit_y, hyper, window_seed);
      } catch (const Error& e) {
        fitted.error = std::string(to_string(e.code())) + ": " + e.what();
      }
      if (cache) cache->store(key, fitted);
    }
    models[c] = fitted.model;
    entry.diagnostics[c] = fitted.error;
    if (!fitted.model) {
      entry.accuracies[c] = 0.0;
      return;
    }
    std::size_t hit = 0;
    for (std::size_t i = 0; i < val_X.size(); ++i) hit += fitted.model->label(val_X[i]) == val_y[i];
    entry.accuracies[c] = static_cast<double>(hit) / static_cast<double>(val_X.size());
  });

  std::size_t best = kCandidateCount;
  for (std::size_t c = 0; c < kCandidateCount; ++c) {
    if (!models[c]) continue;
    if (best == kCandidateCount || entry.accuracies[c] > entry.accuracies[best]) best = c;
  }
  if (best == kCandidateCount) {
    throw Error(ErrorCode::SingleClassTraining,
                "window " + std::to_string(window) + ": every meta-classifier failed; first: " + entry.diagnostics[0]);
  }
  entry.chosen = meta::kAllKinds[best];
  entry.model = models[best];
  return entry;
}

meta::Predictions predict_window(const ScheduleEntry& entry, const meta::Rows& X) {
  if (!entry.model) throw Error(ErrorCode::InvalidConfig, "schedule entry has no fitted model");
  return meta::predict(*entry.model, X);
}

void write_schedule_csv(std::ostream& out, std::span<const ScheduleEntry> schedule) {
  out << "window,chosen,acc_LR,acc_KNN,acc_RBF,acc_Poly,acc_RF,acc_ET,acc_ANN\n";
  for (const auto& e : schedule) {
    out << e.window << ',' << meta::to_string(e.chosen);
    for (double a : e.accuracies) out << ',' << csv::format_double(a);
    out << '\n';
  }
}

}  // namespace tdse::ensemble
