#include "soei/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <regex>

#include "soei/error.hpp"
#include "soei/judge.hpp"
#include "soei/text_util.hpp"

namespace soei::metrics {

std::size_t token_count(std::string_view text, const TokenizerConfig& tok) { return tokenize(text, tok).size(); }

double ttr(std::string_view text, const TokenizerConfig& tok) {
  auto tokens = tokenize(text, tok);
  if (tokens.empty()) throw Error(ErrorCode::EmptyText, "TTR of a text with no tokens");
  std::set<std::string> types(tokens.begin(), tokens.end());
  return static_cast<double>(types.size()) / static_cast<double>(tokens.size());
}

// ---------------------------------------------------------------------------

std::vector<std::string> NgramModel::symbols(std::string_view text) const { return tokenize(text, cfg_.tokenizer); }

std::string NgramModel::context_key(const std::vector<std::string>& padded, std::size_t pos) const {
  std::string key;
  for (std::size_t i = pos + 1 - static_cast<std::size_t>(cfg_.order); i < pos; ++i) {
    key += padded[i];
    key += '\x1f';
  }
  return key;
}

NgramModel NgramModel::train(const std::vector<std::string>& corpus, const NgramConfig& cfg) {
  if (cfg.order < 1 || cfg.order > 3) throw Error(ErrorCode::InvalidArgument, "n-gram order must be 1, 2 or 3");
  if (!(cfg.alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "smoothing alpha must be positive");
  NgramModel m;
  m.cfg_ = cfg;
  m.vocab_.insert(kUnknown);
  std::size_t total = 0;
  for (const auto& doc : corpus) {
    auto syms = m.symbols(doc);
    total += syms.size();
    std::vector<std::string> padded(cfg.order - 1, kBegin);
    padded.insert(padded.end(), syms.begin(), syms.end());
    for (std::size_t pos = cfg.order - 1; pos < padded.size(); ++pos) {
      m.vocab_.insert(padded[pos]);
      auto key = m.context_key(padded, pos);
      m.counts_[key][padded[pos]] += 1.0;
      m.context_totals_[key] += 1.0;
    }
  }
  if (total == 0) throw Error(ErrorCode::EmptyCorpus, "n-gram training corpus has no symbols");
  return m;
}

double NgramModel::probability(const std::vector<std::string>& context, const std::string& symbol) const {
  std::string key;
  const auto need = static_cast<std::size_t>(cfg_.order - 1);
  for (std::size_t i = 0; i < need; ++i) {
    // short contexts are left-padded with the begin marker
    const std::size_t from_end = need - i;
    key += from_end <= context.size() ? context[context.size() - from_end] : std::string(kBegin);
    key += '\x1f';
  }
  const std::string& sym = vocab_.count(symbol) ? symbol : std::string(kUnknown);
  double count = 0.0, total = 0.0;
  if (auto it = counts_.find(key); it != counts_.end()) {
    if (auto c = it->second.find(sym); c != it->second.end()) count = c->second;
    total = context_totals_.at(key);
  }
  return (count + cfg_.alpha) / (total + cfg_.alpha * static_cast<double>(vocab_.size()));
}

double NgramModel::log_prob(std::string_view text, std::size_t& n) const {
  auto syms = symbols(text);
  std::vector<std::string> padded(cfg_.order - 1, kBegin);
  for (auto& s : syms) padded.push_back(vocab_.count(s) ? std::move(s) : std::string(kUnknown));
  double lp = 0.0;
  for (std::size_t pos = cfg_.order - 1; pos < padded.size(); ++pos) {
    std::vector<std::string> ctx(padded.begin() + (pos + 1 - cfg_.order), padded.begin() + pos);
    lp += std::log(probability(ctx, padded[pos]));
    ++n;
  }
  return lp;
}

double NgramModel::perplexity(std::string_view text) const {
  std::size_t n = 0;
  const double lp = log_prob(text, n);
  if (n == 0) throw Error(ErrorCode::EmptyText, "perplexity of a text with no symbols");
  return std::exp(-lp / static_cast<double>(n));
}

// ---------------------------------------------------------------------------

std::string_view to_string(SentimentLabel label) {
  switch (label) {
    case SentimentLabel::Positive: return "Positive";
    case SentimentLabel::Neutral: return "Neutral";
    case SentimentLabel::Negative: return "Negative";
  }
  return "Neutral";
}

LexiconSentiment::LexiconSentiment()
    : LexiconSentiment(
          {"like", "love", "happy", "enjoy", "beautiful", "great", "good", "wonderful", "glad", "interesting", "fun",
           "excited", "enthusiastic", "amazing", "nice", "proud", "hope", "grateful", "thanks", "excellent",
           "favorite", "appreciate", "magnificent", "vivid", "warm", "brave"},
          {"sad", "hate", "bad", "boring", "afraid", "scared", "worried", "angry", "unhappy", "terrible", "awful",
           "lonely", "annoying", "upset", "dislike", "hard", "difficult", "confusing", "sorry"}) {}

LexiconSentiment::LexiconSentiment(std::set<std::string> positive, std::set<std::string> negative)
    : positive_(std::move(positive)), negative_(std::move(negative)) {}

SentimentResult LexiconSentiment::classify(std::string_view text) {
  auto tokens = tokenize(text, TokenizerConfig{TokenMode::UnicodeWords, true});
  if (tokens.empty()) throw Error(ErrorCode::EmptyText, "sentiment of an empty text");
  int pos = 0, neg = 0;
  for (const auto& t : tokens) {
    pos += positive_.count(t) ? 1 : 0;
    neg += negative_.count(t) ? 1 : 0;
  }
  const int total = pos + neg;
  if (total == 0) return {SentimentLabel::Neutral, 1.0};
  if (pos > neg) return {SentimentLabel::Positive, static_cast<double>(pos) / total};
  if (neg > pos) return {SentimentLabel::Negative, static_cast<double>(neg) / total};
  return {SentimentLabel::Neutral, 0.5};
}

SentimentResult parse_sentiment(std::string_view raw) {
  static const std::regex kLine(R"(^\s*(positive|neutral|negative)\s*[,:;]?\s*([01](?:\.\d+)?|\.\d+)\s*\.?\s*$)",
                                std::regex::icase);
  for (auto raw_line : text::split_lines(raw)) {
    auto line = text::strip_markdown(raw_line);
    std::smatch m;
    if (!std::regex_match(line, m, kLine)) continue;
    const double conf = std::stod(m[2].str());
    if (conf < 0.0 || conf > 1.0) break;
    auto label = text::to_lower_ascii(m[1].str());
    SentimentResult r;
    r.label = label == "positive"   ? SentimentLabel::Positive
              : label == "negative" ? SentimentLabel::Negative
                                    : SentimentLabel::Neutral;
    r.confidence = conf;
    return r;
  }
  throw Error(ErrorCode::ClassifierUnavailable, "unreadable sentiment answer: " + std::string(raw));
}

JudgeSentiment::JudgeSentiment(std::shared_ptr<Judge> judge) : judge_(std::move(judge)) {
  if (!judge_) throw Error(ErrorCode::ClassifierUnavailable, "judge sentiment engine needs a judge");
}

SentimentResult JudgeSentiment::classify(std::string_view text) {
  if (text::trim(text).empty()) throw Error(ErrorCode::EmptyText, "sentiment of an empty text");
  std::string raw;
  try {
    raw = judge_->ask({{ChatRole::User, judge_->prompts().sentiment.render({{"text", std::string(text)}})}});
  } catch (const Error& e) {
    throw Error(ErrorCode::ClassifierUnavailable, e.what());
  }
  return parse_sentiment(raw);
}

// ---------------------------------------------------------------------------

MetricTable minmax_normalize_table(const MetricTable& raw) {
  std::map<std::string, std::pair<double, double>> range;
  std::map<std::string, int> present;
  for (const auto& [cohort, row] : raw) {
    for (const auto& [metric, v] : row) {
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite " + metric + " for " + cohort);
      auto [it, fresh] = range.try_emplace(metric, v, v);
      if (!fresh) {
        it->second.first = std::min(it->second.first, v);
        it->second.second = std::max(it->second.second, v);
      }
      ++present[metric];
    }
  }
  for (const auto& [metric, n] : present) {
    if (n < 2) throw Error(ErrorCode::TooFewCohorts, "metric " + metric + " needs at least 2 cohorts");
  }
  if (raw.size() < 2) throw Error(ErrorCode::TooFewCohorts, "normalization needs at least 2 cohorts");
  MetricTable out;
  for (const auto& [cohort, row] : raw) {
    for (const auto& [metric, v] : row) {
      const auto [lo, hi] = range.at(metric);
      out[cohort][metric] = hi > lo ? (v - lo) / (hi - lo) : 0.0;
    }
  }
  return out;
}

MetricReport compute_metric_report(const std::vector<CohortTexts>& cohorts, const MetricsConfig& cfg,
                                   SentimentEngine& sentiment) {
  if (cohorts.size() < 2) throw Error(ErrorCode::TooFewCohorts, "metric report needs at least 2 cohorts");
  std::vector<std::string> pooled;
  for (const auto& c : cohorts) {
    if (c.responses.empty()) throw Error(ErrorCode::EmptyGroup, "cohort " + c.cohort + " has no responses");
    pooled.insert(pooled.end(), c.responses.begin(), c.responses.end());
  }
  auto model = NgramModel::train(pooled, cfg.ngram);

  MetricReport report;
  for (const auto& c : cohorts) {
    double tokens = 0.0, ttr_sum = 0.0, lp = 0.0;
    std::size_t symbols = 0;
    int positive = 0;
    for (const auto& r : c.responses) {
      tokens += static_cast<double>(token_count(r, cfg.tokenizer));
      ttr_sum += ttr(r, cfg.tokenizer);
      lp += model.log_prob(r, symbols);
      positive += sentiment.classify(r).label == SentimentLabel::Positive ? 1 : 0;
    }
    if (symbols == 0) throw Error(ErrorCode::EmptyText, "cohort " + c.cohort + " has no symbols");
    const double n = static_cast<double>(c.responses.size());
    const double perplexity = std::exp(-lp / static_cast<double>(symbols));
    report.raw[c.cohort] = {{kTextToken, tokens / n},
                            {kTtr, ttr_sum / n},
                            {kClarity, 1.0 / perplexity},
                            {kPositiveSentiment, positive / n}};
  }
  report.normalized = minmax_normalize_table(report.raw);
  report.provenance = {{"tokenizer",
                        {{"mode", std::string(to_string(cfg.tokenizer.mode))}, {"lowercase", cfg.tokenizer.lowercase}}},
                       {"ngram",
                        {{"order", cfg.ngram.order},
                         {"alpha", cfg.ngram.alpha},
                         {"mode", std::string(to_string(cfg.ngram.tokenizer.mode))},
                         {"reference", "pooled cohort responses"},
                         {"vocab_size", model.vocab_size()}}},
                       {"sentiment_engine", sentiment.name()},
                       {"clarity", "minmax(1 / perplexity)"}};
  return report;
}

nlohmann::json report_to_json(const MetricReport& report) {
  return {{"raw", report.raw}, {"normalized", report.normalized}, {"provenance", report.provenance}};
}

}  // namespace soei::metrics
