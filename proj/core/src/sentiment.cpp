#include "tdse/sentiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "tdse/csv.hpp"
#include "tdse/error.hpp"

namespace tdse::sentiment {

namespace {

// Decodes UTF-8; malformed bytes come back as U+FFFD.
std::vector<char32_t> code_points(std::string_view s) {
  std::vector<char32_t> out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t cp = c;
    if (c >= 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else if (c >= 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if (c >= 0xC0) {
      len = 2;
      cp = c & 0x1F;
    }
    if (i + len > s.size()) {
      out.push_back(0xFFFD);
      break;
    }
    for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(len == 1 && c >= 0x80 ? 0xFFFD : cp);
    i += len;
  }
  return out;
}

bool is_punctuation(char32_t cp) {
  if (cp < 0x80) return std::ispunct(static_cast<int>(cp)) || std::isspace(static_cast<int>(cp));
  return (cp >= 0x00A0 && cp <= 0x00BF) || (cp >= 0x2000 && cp <= 0x206F) || (cp >= 0x3000 && cp <= 0x303F) ||
         (cp >= 0xFE30 && cp <= 0xFE4F) || (cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
         (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65);
}

bool is_digit(char32_t cp) { return (cp >= U'0' && cp <= U'9') || (cp >= 0xFF10 && cp <= 0xFF19); }

bool is_numeric_token(const std::vector<char32_t>& cps) {
  bool any_digit = false;
  for (char32_t cp : cps) {
    if (is_digit(cp)) {
      any_digit = true;
    } else if (cp != U'.' && cp != U',' && cp != U'%' && cp != U'-' && cp != U'+') {
      return false;
    }
  }
  return any_digit;
}

}  // namespace

void validate(const SentimentLexicon& lexicon) {
  if (lexicon.positive.empty() || lexicon.negative.empty()) {
    throw Error(ErrorCode::InvalidConfig, "sentiment lexicon needs positive and negative terms");
  }
  for (const auto& t : lexicon.positive) {
    if (lexicon.negative.count(t)) throw Error(ErrorCode::InvalidConfig, "term in both lexicon lists: " + t);
  }
}

std::unordered_set<std::string> load_term_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingSource, "cannot open '" + path.string() + "'");
  std::unordered_set<std::string> terms;
  std::string line;
  while (csv::getline(in, line)) {
    const std::string t = csv::trim(line);
    if (!t.empty() && t.front() != '#') terms.insert(t);
  }
  return terms;
}

SentimentLexicon load_lexicon(const std::filesystem::path& positive, const std::filesystem::path& negative) {
  SentimentLexicon lex{load_term_list(positive), load_term_list(negative)};
  validate(lex);
  return lex;
}

Tokens preprocess(std::span<const std::string> document, const std::unordered_set<std::string>& stopwords) {
  Tokens out;
  for (const auto& token : document) {
    if (token.empty() || stopwords.count(token)) continue;
    const auto cps = code_points(token);
    if (std::all_of(cps.begin(), cps.end(), is_punctuation)) continue;
    if (is_numeric_token(cps)) continue;
    out.push_back(token);
  }
  return out;
}

TfIdf::TfIdf(std::span<const Tokens> corpus) : documents_(corpus.size()) {
  for (const auto& doc : corpus) {
    std::unordered_set<std::string> seen(doc.begin(), doc.end());
    for (const auto& t : seen) ++df_[t];
  }
}

double TfIdf::idf(const std::string& term) const {
  if (documents_ == 0) return 0.0;
  const auto it = df_.find(term);
  const double df = it == df_.end() ? 1.0 : static_cast<double>(it->second);
  return std::log(static_cast<double>(documents_) / df);
}

TermWeights TfIdf::weights(std::span<const std::string> document) const {
  TermWeights counts;
  for (const auto& t : document) counts[t] += 1.0;
  const double len = static_cast<double>(document.size());
  for (auto& [term, w] : counts) w = (w / len) * idf(term);
  return counts;
}

std::vector<TermWeights> tfidf(std::span<const Tokens> corpus) {
  const TfIdf model(corpus);
  std::vector<TermWeights> out;
  out.reserve(corpus.size());
  for (const auto& doc : corpus) out.push_back(model.weights(doc));
  return out;
}

Polarity classify_document(const TermWeights& weights, const SentimentLexicon& lexicon) {
  // Sum in a fixed term order so the result does not depend on hash layout.
  std::vector<std::pair<std::string, double>> sorted(weights.begin(), weights.end());
  std::sort(sorted.begin(), sorted.end());
  double margin = 0.0;
  for (const auto& [term, w] : sorted) {
    if (lexicon.positive.count(term)) margin += w;
    if (lexicon.negative.count(term)) margin -= w;
  }
  if (margin > 0.0) return Polarity::Positive;
  if (margin < 0.0) return Polarity::Negative;
  return Polarity::Neutral;
}

data::SentimentRow daily_index(Date date, std::span<const Polarity> documents) {
  data::SentimentRow row;
  row.date = date;
  row.news_count = documents.size();
  if (documents.empty()) return row;
  const double n = static_cast<double>(documents.size());
  const auto count = [&](Polarity p) { return static_cast<double>(std::count(documents.begin(), documents.end(), p)); };
  row.positive = count(Polarity::Positive) / n;
  row.negative = count(Polarity::Negative) / n;
  row.neutral = count(Polarity::Neutral) / n;
  return row;
}

std::vector<NewsItem> parse_news(std::istream& in, const std::string& source) {
  std::vector<NewsItem> out;
  std::string line;
  std::size_t line_no = 0;
  while (csv::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto tab = line.find('\t');
    const std::string ctx = source + ":" + std::to_string(line_no);
    if (tab == std::string::npos) throw Error(ErrorCode::MalformedRow, ctx + ": expected date<TAB>tokens");
    NewsItem item;
    try {
      item.date = parse_date(csv::trim(std::string_view(line).substr(0, tab)));
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedRow, ctx + ": " + e.what());
    }
    for (const auto& t : csv::split(std::string_view(line).substr(tab + 1), ' ')) {
      if (!t.empty()) item.tokens.push_back(t);
    }
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<NewsItem> load_news(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingSource, "cannot open '" + path.string() + "'");
  return parse_news(in, path.string());
}

data::SentimentIndexSeries build_index(const std::string& provider, std::span<const NewsItem> news,
                                       std::span<const Date> calendar, const SentimentLexicon& lexicon,
                                       const IndexOptions& options) {
  validate(lexicon);
  std::vector<Tokens> cleaned;
  cleaned.reserve(news.size());
  for (const auto& item : news) cleaned.push_back(preprocess(item.tokens, options.stopwords));

  std::vector<Tokens> reference;
  for (std::size_t i = 0; i < news.size(); ++i) {
    if (options.idf_from && news[i].date < *options.idf_from) continue;
    if (options.idf_to && news[i].date > *options.idf_to) continue;
    reference.push_back(cleaned[i]);
  }
  const TfIdf model(reference);

  std::vector<std::vector<Polarity>> per_day(calendar.size());
  for (std::size_t i = 0; i < news.size(); ++i) {
    const auto it = std::lower_bound(calendar.begin(), calendar.end(), news[i].date);
    if (it == calendar.end()) continue;
    per_day[static_cast<std::size_t>(it - calendar.begin())].push_back(
        classify_document(model.weights(cleaned[i]), lexicon));
  }
  data::SentimentIndexSeries series;
  series.provider = provider;
  for (std::size_t d = 0; d < calendar.size(); ++d) series.rows.push_back(daily_index(calendar[d], per_day[d]));
  return series;
}

}  // namespace tdse::sentiment
