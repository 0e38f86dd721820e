#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tdse/data_model.hpp"
#include "tdse/sentiment.hpp"

namespace tdse::synth {

/// Generator of a multi-source dataset with three planted signals, each a
/// noisy view of the next day's target direction z(t+1):
///
///  - global: every symbol of the signal branches (Asia and Pre) returns
///    0.01 * (global_strength * z(t+1) + region noise + symbol noise);
///    the other branches carry noise with the same spread;
///  - industry: industries form `industry_groups` groups sharing a group
///    factor. One group at a time is informative, 0.01 * (industry_strength
///    * z(t+1) + noise); the informative group rotates every
///    `rotation_months` calendar months;
///  - media: each provider's documents on day t lean positive with
///    probability 0.5 + 0.5 * sentiment_strength * z(t+1) * (1 - 0.1 * i)
///    for provider i.
///
/// The target's close-to-close return on day t has sign z(t) and magnitude
/// uniform in [0.2%, 1.2%]. Global symbols miss about 2% of days at random.
struct SyntheticConfig {
  int months = 31;
  std::string start = "2019-01-01";
  std::size_t symbols_per_branch = 2;
  std::size_t industries = 12;
  std::size_t industry_groups = 3;
  int rotation_months = 6;
  std::size_t providers = 5;
  std::size_t docs_per_day = 6;
  double global_strength = 0.8;
  double industry_strength = 1.5;
  double sentiment_strength = 0.4;
  std::uint64_t seed = 1;
};

struct SyntheticData {
  data::MarketSeries target;
  std::vector<data::BranchAssignment> branches;
  std::map<std::string, data::MarketSeries> global;
  data::IndustryTable industry;
  std::vector<std::string> providers;
  std::vector<std::vector<sentiment::NewsItem>> news;  // per provider
  std::vector<std::string> positive_terms;
  std::vector<std::string> negative_terms;
  std::vector<std::string> stopwords;
  std::vector<int> direction;  // z(t) per calendar day; z(0) = 0
};

SyntheticData generate(const SyntheticConfig& config);

/// Writes the raw data layout read by `ingest`:
///
///     target.csv  branches.cfg  industry.csv  global/<symbol>.csv
///     news/<provider>.tsv  lexicon/{positive,negative,stopwords}.txt
///     tdse.cfg (data keys for this layout plus the seed)
void write(const SyntheticData& data, const std::filesystem::path& dir, std::uint64_t seed);

}  // namespace tdse::synth
