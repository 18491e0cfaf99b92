#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "soei/domain.hpp"

namespace soei::stats {

// Special functions, accurate to roughly 1e-12 over the ranges used here.
// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);
double student_t_cdf(double t, double df);
// Upper tail P(F > f) for F(d1, d2).
double f_sf(double f, double d1, double d2);

double mean(std::span<const double> xs);
// Sample variance (n - 1 denominator).
double variance(std::span<const double> xs);

// ---------------------------------------------------------------------------

struct RecognitionGroup {
  std::string evaluator_id;
  std::string cohort;
  int compliant = 0;
  int total = 0;
  double probability = 0.0;
};

// Fraction of verdicts judged compliant. Invalid verdicts are excluded.
double recognition_probability(std::span<const Verdict> verdicts);
// Groups by (evaluator_id, cohort_of(sample_id)).
std::vector<RecognitionGroup> recognition_by_group(std::span<const Verdict> verdicts,
                                                   const std::map<std::string, std::string>& cohort_of_sample);

struct KappaResult {
  double kappa = 0.0;
  double p_bar = 0.0;
  double p_e = 0.0;
};

// ratings[i][r] is the category rater r gave item i. Categories are compared
// by value; `declared_categories` widens the category space beyond those seen.
KappaResult fleiss_kappa(const std::vector<std::vector<std::string>>& ratings, int declared_categories = 0);
// Count form: counts[i][c] raters assigning item i to category c.
KappaResult fleiss_kappa_counts(const std::vector<std::vector<int>>& counts);

struct TTestResult {
  double t = 0.0;
  int df = 0;
  double p_two_sided = 1.0;
  // Differences are taken as pre - post.
  double mean_difference = 0.0;
};

TTestResult paired_t_test(std::span<const double> pre, std::span<const double> post);

struct AnovaRow {
  std::string source;
  double ss = 0.0;
  int df = 0;
  double ms = 0.0;
  // Absent on the residual row.
  std::optional<double> f;
  std::optional<double> p;
};

struct AnovaResult {
  std::vector<AnovaRow> rows;
  double ss_total = 0.0;
  int df_total = 0;

  const AnovaRow& row(const std::string& source) const;
};

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups);

// cells[a][b] holds the replicates for level a of factor A and level b of
// factor B. Every cell must have the same size, at least 2.
AnovaResult two_way_anova(const std::vector<std::vector<std::vector<double>>>& cells,
                          const std::string& name_a = "A", const std::string& name_b = "B");

// ---------------------------------------------------------------------------

// Rank position 1..5 maps to (6 - r) / 5; absent maps to 0.
double position_weight(std::optional<int> rank_position);
double ranking_score(std::span<const TraitCode> ranking, TraitCode truth);
double topk_accuracy(std::span<const RankingPrediction> predictions, int k);

struct ScoreMatrix {
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  // values[r][c]; absent cells are nullopt.
  std::vector<std::vector<std::optional<double>>> values;

  std::vector<double> row_means() const;
};

struct ScoredTurn {
  std::string participant;
  TraitCode trait = TraitCode::HN;
  double score = 0.0;
};

ScoreMatrix score_matrix(std::span<const ScoredTurn> turns);
// Mean of each row of a plain matrix; throws EmptyGroup on an empty row.
std::vector<double> row_means(const std::vector<std::vector<double>>& matrix);

std::vector<std::pair<std::int64_t, double>> trajectory(std::span<const RankingPrediction> predictions);

struct DistributionSummary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  std::vector<double> outliers;
};

// Linear-interpolation quartiles; outliers lie beyond 1.5 IQR of the box.
// min and max are the whisker ends, so they exclude outliers.
DistributionSummary distribution_summary(std::span<const double> scores);
// `sorted` must be ascending and non-empty.
double quantile(std::span<const double> sorted, double q);

}  // namespace soei::stats
