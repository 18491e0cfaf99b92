#include "soei/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "soei/error.hpp"

namespace soei::stats {

namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (a <= 0 || b <= 0) throw Error(ErrorCode::InvalidArgument, "incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (df <= 0) throw Error(ErrorCode::InvalidArgument, "t distribution needs df > 0");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
  return t > 0 ? 1.0 - tail : tail;
}

double f_sf(double f, double d1, double d2) {
  if (d1 <= 0 || d2 <= 0) throw Error(ErrorCode::InvalidArgument, "F distribution needs positive df");
  if (f <= 0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw Error(ErrorCode::EmptyGroup, "mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  if (xs.size() < 2) throw Error(ErrorCode::InvalidArgument, "variance needs at least 2 observations");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

// ---------------------------------------------------------------------------

double recognition_probability(std::span<const Verdict> verdicts) {
  int compliant = 0, total = 0;
  for (const auto& v : verdicts) {
    if (!v.valid) continue;
    ++total;
    compliant += v.compliant ? 1 : 0;
  }
  if (total == 0) throw Error(ErrorCode::EmptyGroup, "no valid verdicts in group");
  return static_cast<double>(compliant) / total;
}

std::vector<RecognitionGroup> recognition_by_group(std::span<const Verdict> verdicts,
                                                   const std::map<std::string, std::string>& cohort_of_sample) {
  std::map<std::pair<std::string, std::string>, RecognitionGroup> groups;
  for (const auto& v : verdicts) {
    auto it = cohort_of_sample.find(v.sample_id);
    if (it == cohort_of_sample.end()) {
      throw Error(ErrorCode::InvalidArgument, "sample " + v.sample_id + " has no cohort");
    }
    auto& g = groups[{v.evaluator_id, it->second}];
    g.evaluator_id = v.evaluator_id;
    g.cohort = it->second;
    if (!v.valid) continue;
    ++g.total;
    g.compliant += v.compliant ? 1 : 0;
  }
  std::vector<RecognitionGroup> out;
  for (auto& [_, g] : groups) {
    if (g.total == 0) {
      throw Error(ErrorCode::EmptyGroup, "no valid verdicts for " + g.evaluator_id + "/" + g.cohort);
    }
    g.probability = static_cast<double>(g.compliant) / g.total;
    out.push_back(g);
  }
  return out;
}

KappaResult fleiss_kappa_counts(const std::vector<std::vector<int>>& counts) {
  if (counts.size() < 2) throw Error(ErrorCode::InvalidArgument, "Fleiss kappa needs at least 2 items");
  const std::size_t k = counts.front().size();
  if (k < 2) throw Error(ErrorCode::DegenerateAgreement, "Fleiss kappa needs at least 2 categories");
  int n = -1;
  for (const auto& row : counts) {
    if (row.size() != k) throw Error(ErrorCode::InvalidArgument, "every item needs the same category count");
    int raters = 0;
    for (int c : row) {
      if (c < 0) throw Error(ErrorCode::InvalidArgument, "negative rating count");
      raters += c;
    }
    if (n < 0) n = raters;
    if (raters != n) throw Error(ErrorCode::UnequalRaters, "items were rated by different numbers of raters");
  }
  if (n < 2) throw Error(ErrorCode::UnequalRaters, "Fleiss kappa needs at least 2 raters per item");
  const double items = static_cast<double>(counts.size());
  std::vector<double> p(k, 0.0);
  double p_bar = 0.0;
  for (const auto& row : counts) {
    double agree = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      p[j] += row[j];
      agree += static_cast<double>(row[j]) * (row[j] - 1);
    }
    p_bar += agree / (static_cast<double>(n) * (n - 1));
  }
  p_bar /= items;
  double p_e = 0.0;
  for (auto& pj : p) {
    pj /= items * n;
    p_e += pj * pj;
  }
  if (p_e >= 1.0 - 1e-15) {
    throw Error(ErrorCode::DegenerateAgreement, "expected agreement is 1; kappa is undefined");
  }
  return {(p_bar - p_e) / (1.0 - p_e), p_bar, p_e};
}

KappaResult fleiss_kappa(const std::vector<std::vector<std::string>>& ratings, int declared_categories) {
  std::set<std::string> seen;
  for (const auto& row : ratings) seen.insert(row.begin(), row.end());
  std::map<std::string, std::size_t> index;
  for (const auto& c : seen) index.emplace(c, index.size());
  const std::size_t k = std::max<std::size_t>(seen.size(), declared_categories > 0 ? declared_categories : 0);
  std::vector<std::vector<int>> counts;
  for (const auto& row : ratings) {
    std::vector<int> c(k, 0);
    for (const auto& r : row) ++c[index.at(r)];
    counts.push_back(std::move(c));
  }
  return fleiss_kappa_counts(counts);
}

TTestResult paired_t_test(std::span<const double> pre, std::span<const double> post) {
  if (pre.size() != post.size()) {
    throw Error(ErrorCode::LengthMismatch, "paired samples differ in length (" + std::to_string(pre.size()) +
                                               " vs " + std::to_string(post.size()) + ")");
  }
  if (pre.size() < 2) throw Error(ErrorCode::InvalidArgument, "paired t-test needs at least 2 pairs");
  std::vector<double> d(pre.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = pre[i] - post[i];
  const double md = mean(d);
  double ss = 0.0;
  for (double x : d) ss += (x - md) * (x - md);
  const double n = static_cast<double>(d.size());
  const double sd = std::sqrt(ss / (n - 1));
  if (!(sd > 0.0) || sd < 1e-12 * (std::fabs(md) + 1.0)) {
    throw Error(ErrorCode::ZeroVariance, "differences have zero variance");
  }
  TTestResult r;
  r.mean_difference = md;
  r.df = static_cast<int>(d.size()) - 1;
  r.t = md / (sd / std::sqrt(n));
  r.p_two_sided = std::min(1.0, 2.0 * student_t_cdf(-std::fabs(r.t), r.df));
  return r;
}

const AnovaRow& AnovaResult::row(const std::string& source) const {
  for (const auto& r : rows) {
    if (r.source == source) return r;
  }
  throw Error(ErrorCode::NotFound, "no ANOVA row named " + source);
}

namespace {

AnovaRow effect_row(std::string source, double ss, int df, double ms_res, int df_res) {
  AnovaRow row{std::move(source), ss, df, ss / df, std::nullopt, std::nullopt};
  row.f = row.ms / ms_res;
  row.p = f_sf(*row.f, df, df_res);
  return row;
}

}  // namespace

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw Error(ErrorCode::TooFewGroups, "one-way ANOVA needs at least 2 groups");
  std::vector<double> all;
  for (const auto& g : groups) {
    if (g.empty()) throw Error(ErrorCode::EmptyGroup, "one-way ANOVA group is empty");
    if (g.size() < 2) throw Error(ErrorCode::InvalidArgument, "each ANOVA group needs at least 2 observations");
    all.insert(all.end(), g.begin(), g.end());
  }
  const double grand = mean(all);
  double ss_between = 0.0, ss_within = 0.0, ss_total = 0.0;
  for (const auto& g : groups) {
    const double m = mean(g);
    ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double x : g) ss_within += (x - m) * (x - m);
  }
  for (double x : all) ss_total += (x - grand) * (x - grand);
  const int df_between = static_cast<int>(groups.size()) - 1;
  const int df_within = static_cast<int>(all.size() - groups.size());
  if (ss_within <= 0.0) throw Error(ErrorCode::DegenerateVariance, "within-group variance is zero; F is undefined");
  const double ms_within = ss_within / df_within;
  AnovaResult r;
  r.rows.push_back(effect_row("Between", ss_between, df_between, ms_within, df_within));
  r.rows.push_back({"Within", ss_within, df_within, ms_within, std::nullopt, std::nullopt});
  r.ss_total = ss_total;
  r.df_total = static_cast<int>(all.size()) - 1;
  return r;
}

AnovaResult two_way_anova(const std::vector<std::vector<std::vector<double>>>& cells, const std::string& name_a,
                          const std::string& name_b) {
  const std::size_t a = cells.size();
  if (a < 2) throw Error(ErrorCode::TooFewGroups, "factor " + name_a + " needs at least 2 levels");
  const std::size_t b = cells.front().size();
  if (b < 2) throw Error(ErrorCode::TooFewGroups, "factor " + name_b + " needs at least 2 levels");
  const std::size_t n = cells.front().front().size();
  for (const auto& row : cells) {
    if (row.size() != b) throw Error(ErrorCode::UnbalancedDesign, "every level of " + name_a + " needs all levels of " + name_b);
    for (const auto& cell : row) {
      if (cell.size() != n) throw Error(ErrorCode::UnbalancedDesign, "cells have unequal replicate counts");
    }
  }
  if (n < 2) throw Error(ErrorCode::UnbalancedDesign, "each cell needs at least 2 replicates");

  std::vector<std::vector<double>> cell_mean(a, std::vector<double>(b));
  std::vector<double> mean_a(a, 0.0), mean_b(b, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < a; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      cell_mean[i][j] = mean(cells[i][j]);
      mean_a[i] += cell_mean[i][j] / b;
      mean_b[j] += cell_mean[i][j] / a;
      grand += cell_mean[i][j] / (a * b);
    }
  }
  const double dn = static_cast<double>(n);
  double ss_a = 0.0, ss_b = 0.0, ss_ab = 0.0, ss_res = 0.0, ss_total = 0.0;
  for (std::size_t i = 0; i < a; ++i) ss_a += b * dn * (mean_a[i] - grand) * (mean_a[i] - grand);
  for (std::size_t j = 0; j < b; ++j) ss_b += a * dn * (mean_b[j] - grand) * (mean_b[j] - grand);
  for (std::size_t i = 0; i < a; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const double inter = cell_mean[i][j] - mean_a[i] - mean_b[j] + grand;
      ss_ab += dn * inter * inter;
      for (double x : cells[i][j]) {
        ss_res += (x - cell_mean[i][j]) * (x - cell_mean[i][j]);
        ss_total += (x - grand) * (x - grand);
      }
    }
  }
  const int df_a = static_cast<int>(a) - 1;
  const int df_b = static_cast<int>(b) - 1;
  const int df_ab = df_a * df_b;
  const int df_res = static_cast<int>(a * b * (n - 1));
  if (ss_res <= 0.0) throw Error(ErrorCode::DegenerateVariance, "residual variance is zero; F is undefined");
  const double ms_res = ss_res / df_res;
  AnovaResult r;
  r.rows.push_back(effect_row(name_a, ss_a, df_a, ms_res, df_res));
  r.rows.push_back(effect_row(name_b, ss_b, df_b, ms_res, df_res));
  r.rows.push_back(effect_row(name_a + ":" + name_b, ss_ab, df_ab, ms_res, df_res));
  r.rows.push_back({"Residual", ss_res, df_res, ms_res, std::nullopt, std::nullopt});
  r.ss_total = ss_total;
  r.df_total = static_cast<int>(a * b * n) - 1;
  return r;
}

// ---------------------------------------------------------------------------

double position_weight(std::optional<int> rank_position) {
  if (!rank_position) return 0.0;
  if (*rank_position < 1 || *rank_position > 5) {
    throw Error(ErrorCode::InvalidArgument, "rank position must lie in 1..5");
  }
  return (6 - *rank_position) / 5.0;
}

double ranking_score(std::span<const TraitCode> ranking, TraitCode truth) {
  auto it = std::find(ranking.begin(), ranking.end(), truth);
  if (it == ranking.end()) return position_weight(std::nullopt);
  return position_weight(static_cast<int>(it - ranking.begin()) + 1);
}

double topk_accuracy(std::span<const RankingPrediction> predictions, int k) {
  if (predictions.empty()) throw Error(ErrorCode::EmptyPredictions, "top-k accuracy over no predictions");
  if (k < 1 || k > 5) throw Error(ErrorCode::InvalidArgument, "k must lie in 1..5");
  int hits = 0;
  for (const auto& p : predictions) {
    const auto limit = std::min<std::size_t>(k, p.ranking.size());
    if (std::find(p.ranking.begin(), p.ranking.begin() + limit, p.truth) != p.ranking.begin() + limit) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

std::vector<double> ScoreMatrix::row_means() const {
  std::vector<double> out;
  for (std::size_t r = 0; r < values.size(); ++r) {
    std::vector<double> present;
    for (const auto& v : values[r]) {
      if (v) present.push_back(*v);
    }
    if (present.empty()) throw Error(ErrorCode::EmptyGroup, "score matrix row " + rows[r] + " has no values");
    out.push_back(mean(present));
  }
  return out;
}

ScoreMatrix score_matrix(std::span<const ScoredTurn> turns) {
  if (turns.empty()) throw Error(ErrorCode::EmptyGroup, "score matrix over no turns");
  ScoreMatrix m;
  std::map<std::string, std::size_t> col_index;
  for (const auto& t : turns) {
    if (!col_index.count(t.participant)) {
      col_index.emplace(t.participant, m.cols.size());
      m.cols.push_back(t.participant);
    }
  }
  std::map<std::pair<TraitCode, std::size_t>, std::pair<double, int>> sums;
  std::set<TraitCode> traits;
  for (const auto& t : turns) {
    if (t.score < 0.0 || t.score > 1.0) throw Error(ErrorCode::InvalidArgument, "turn score outside [0, 1]");
    auto& s = sums[{t.trait, col_index.at(t.participant)}];
    s.first += t.score;
    ++s.second;
    traits.insert(t.trait);
  }
  for (auto trait : kAllTraits) {
    if (!traits.count(trait)) continue;
    m.rows.emplace_back(to_string(trait));
    std::vector<std::optional<double>> row(m.cols.size());
    for (std::size_t c = 0; c < m.cols.size(); ++c) {
      if (auto it = sums.find({trait, c}); it != sums.end()) row[c] = it->second.first / it->second.second;
    }
    m.values.push_back(std::move(row));
  }
  return m;
}

std::vector<double> row_means(const std::vector<std::vector<double>>& matrix) {
  std::vector<double> out;
  for (const auto& row : matrix) out.push_back(mean(row));
  return out;
}

std::vector<std::pair<std::int64_t, double>> trajectory(std::span<const RankingPrediction> predictions) {
  std::vector<std::pair<std::int64_t, double>> out;
  for (const auto& p : predictions) out.emplace_back(p.turn_index, p.score);
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  return out;
}

double quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::EmptyGroup, "quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

DistributionSummary distribution_summary(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorCode::EmptyGroup, "distribution summary of an empty sample");
  std::vector<double> s(scores.begin(), scores.end());
  std::sort(s.begin(), s.end());
  DistributionSummary d;
  d.q1 = quantile(s, 0.25);
  d.median = quantile(s, 0.5);
  d.q3 = quantile(s, 0.75);
  const double iqr = d.q3 - d.q1;
  const double lo = d.q1 - 1.5 * iqr, hi = d.q3 + 1.5 * iqr;
  d.min = std::numeric_limits<double>::infinity();
  d.max = -std::numeric_limits<double>::infinity();
  for (double x : s) {
    if (x < lo || x > hi) {
      d.outliers.push_back(x);
    } else {
      d.min = std::min(d.min, x);
      d.max = std::max(d.max, x);
    }
  }
  return d;
}

}  // namespace soei::stats
