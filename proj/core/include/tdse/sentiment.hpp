#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tdse/data_model.hpp"

namespace tdse::sentiment {

using Tokens = std::vector<std::string>;

struct SentimentLexicon {
  std::unordered_set<std::string> positive;
  std::unordered_set<std::string> negative;
};

/// Throws InvalidConfig unless both sets are non-empty and disjoint.
void validate(const SentimentLexicon& lexicon);

/// One term per line, UTF-8; blank lines and lines starting with '#' skipped.
std::unordered_set<std::string> load_term_list(const std::filesystem::path& path);
SentimentLexicon load_lexicon(const std::filesystem::path& positive, const std::filesystem::path& negative);

/// Drops punctuation-only tokens, digit-only tokens and stopwords.
Tokens preprocess(std::span<const std::string> document, const std::unordered_set<std::string>& stopwords);

using TermWeights = std::unordered_map<std::string, double>;

/// Document frequencies of a reference corpus; weights are
/// tf(term, doc) * ln(N / df(term)) with tf = count / doc length.
class TfIdf {
 public:
  explicit TfIdf(std::span<const Tokens> corpus);

  /// Terms absent from the reference corpus are treated as df = 1.
  TermWeights weights(std::span<const std::string> document) const;
  double idf(const std::string& term) const;
  std::size_t document_count() const { return documents_; }

 private:
  std::size_t documents_ = 0;
  std::unordered_map<std::string, std::size_t> df_;
};

/// Weights for every document of `corpus`, with idf fit on the same corpus.
std::vector<TermWeights> tfidf(std::span<const Tokens> corpus);

enum class Polarity { Positive, Negative, Neutral };

Polarity classify_document(const TermWeights& weights, const SentimentLexicon& lexicon);

/// Proportions of Positive / Negative / Neutral documents; a day without
/// documents gets (1/3, 1/3, 1/3) and count 0.
data::SentimentRow daily_index(Date date, std::span<const Polarity> documents);

struct NewsItem {
  Date date;
  Tokens tokens;
};

/// Reads `date<TAB>space-separated tokens` rows.
std::vector<NewsItem> parse_news(std::istream& in, const std::string& source = "<stream>");
std::vector<NewsItem> load_news(const std::filesystem::path& path);

struct IndexOptions {
  std::unordered_set<std::string> stopwords;
  /// Only documents dated within [idf_from, idf_to] contribute document
  /// frequencies. Unset bounds mean the whole corpus.
  std::optional<Date> idf_from;
  std::optional<Date> idf_to;
};

/// Full pipeline for one provider: preprocess, weight, classify, aggregate.
/// Documents dated on a non-trading day count toward the next calendar day;
/// documents after the last calendar day are ignored.
data::SentimentIndexSeries build_index(const std::string& provider, std::span<const NewsItem> news,
                                       std::span<const Date> calendar, const SentimentLexicon& lexicon,
                                       const IndexOptions& options = {});

}  // namespace tdse::sentiment
