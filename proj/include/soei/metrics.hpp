#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "soei/tokenize.hpp"

namespace soei {
class Judge;
}

namespace soei::metrics {

std::size_t token_count(std::string_view text, const TokenizerConfig& tok = {});
// Distinct / total tokens. Throws EmptyText when there are no tokens.
double ttr(std::string_view text, const TokenizerConfig& tok = {});

struct NgramConfig {
  int order = 2;
  double alpha = 1.0;
  TokenizerConfig tokenizer{TokenMode::Characters, true};
};

// Additive-smoothed n-gram model. The vocabulary is every training symbol
// plus an unknown symbol; contexts are padded with a begin marker that is
// never predicted.
class NgramModel {
 public:
  static NgramModel train(const std::vector<std::string>& corpus, const NgramConfig& cfg = {});

  double probability(const std::vector<std::string>& context, const std::string& symbol) const;
  // exp of the mean negative log-probability over the text's symbols.
  double perplexity(std::string_view text) const;
  // Sums log-probabilities; adds the symbol count to `symbols`.
  double log_prob(std::string_view text, std::size_t& symbols) const;

  const NgramConfig& config() const { return cfg_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  const std::set<std::string>& vocab() const { return vocab_; }

  static constexpr const char* kUnknown = "<unk>";
  static constexpr const char* kBegin = "<s>";

 private:
  std::vector<std::string> symbols(std::string_view text) const;
  std::string context_key(const std::vector<std::string>& padded, std::size_t pos) const;

  NgramConfig cfg_;
  std::set<std::string> vocab_;
  std::map<std::string, std::map<std::string, double>> counts_;
  std::map<std::string, double> context_totals_;
};

// ---------------------------------------------------------------------------

enum class SentimentLabel { Positive, Neutral, Negative };
std::string_view to_string(SentimentLabel label);

struct SentimentResult {
  SentimentLabel label = SentimentLabel::Neutral;
  double confidence = 0.0;
};

class SentimentEngine {
 public:
  virtual ~SentimentEngine() = default;
  virtual SentimentResult classify(std::string_view text) = 0;
  virtual std::string name() const = 0;
};

// Counts marker words. More positive than negative markers gives Positive,
// and so on; no markers gives Neutral.
class LexiconSentiment : public SentimentEngine {
 public:
  LexiconSentiment();
  LexiconSentiment(std::set<std::string> positive, std::set<std::string> negative);

  SentimentResult classify(std::string_view text) override;
  std::string name() const override { return "lexicon"; }

 private:
  std::set<std::string> positive_;
  std::set<std::string> negative_;
};

// Parses "<Label>, <confidence>". Throws ClassifierUnavailable on anything else.
SentimentResult parse_sentiment(std::string_view raw);

class JudgeSentiment : public SentimentEngine {
 public:
  explicit JudgeSentiment(std::shared_ptr<Judge> judge);

  SentimentResult classify(std::string_view text) override;
  std::string name() const override { return "judge"; }

 private:
  std::shared_ptr<Judge> judge_;
};

// ---------------------------------------------------------------------------

// cohort -> metric -> value
using MetricTable = std::map<std::string, std::map<std::string, double>>;

// Per metric column: (x - min) / (max - min); a constant column maps to 0.
MetricTable minmax_normalize_table(const MetricTable& raw);

inline constexpr const char* kTextToken = "text_token";
inline constexpr const char* kTtr = "ttr";
inline constexpr const char* kClarity = "clarity";
inline constexpr const char* kPositiveSentiment = "positive_sentiment";

struct CohortTexts {
  std::string cohort;
  std::vector<std::string> responses;
};

struct MetricsConfig {
  TokenizerConfig tokenizer;
  NgramConfig ngram;
};

struct MetricReport {
  MetricTable raw;
  MetricTable normalized;
  nlohmann::json provenance;
};

// Raw columns: mean tokens per response, mean per-response TTR, reciprocal
// perplexity under a model trained on all cohorts pooled, and the fraction
// of responses labelled Positive.
MetricReport compute_metric_report(const std::vector<CohortTexts>& cohorts, const MetricsConfig& cfg,
                                   SentimentEngine& sentiment);

nlohmann::json report_to_json(const MetricReport& report);

}  // namespace soei::metrics
