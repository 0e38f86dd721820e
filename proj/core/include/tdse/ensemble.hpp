#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tdse/er_fusion.hpp"
#include "tdse/meta.hpp"

namespace tdse::ensemble {

using er::ProbabilityPair;

inline constexpr std::size_t kFeatureWidth = 6;
inline constexpr std::size_t kCandidateCount = meta::kAllKinds.size();

/// Rows [pG.up, pG.down, pI.up, pI.down, pM.up, pM.down].
meta::Rows stack_features(std::span<const ProbabilityPair> global, std::span<const ProbabilityPair> industry,
                          std::span<const ProbabilityPair> media);

/// Thread-safe memo of fitted candidates keyed by window and hyper-parameters.
/// Failed fits are remembered too.
class FitCache {
 public:
  struct Entry {
    meta::ModelPtr model;  // null when the fit failed
    std::string error;
  };

  std::optional<Entry> find(const std::string& key) const;
  void store(const std::string& key, Entry entry);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, Entry> entries_;
};

struct ScheduleEntry {
  std::size_t window = 0;
  meta::Kind chosen = meta::Kind::LR;
  std::array<double, kCandidateCount> accuracies{};  // in kAllKinds order
  std::array<std::string, kCandidateCount> diagnostics{};
  meta::ModelPtr model;
};

/// Fits all seven candidates on the first 80% of the meta-train rows, scores
/// them on the last 20% and keeps the most accurate (ties follow kAllKinds
/// order). A failed candidate scores 0; if every candidate fails the first
/// error is rethrown. The chosen model is not refit.
ScheduleEntry select_meta(std::size_t window, const meta::Rows& X, std::span<const int> y,
                          const meta::MetaHyper& hyper, std::uint64_t seed, FitCache* cache = nullptr,
                          std::size_t workers = 1);

meta::Predictions predict_window(const ScheduleEntry& entry, const meta::Rows& X);

void write_schedule_csv(std::ostream& out, std::span<const ScheduleEntry> schedule);

}  // namespace tdse::ensemble
