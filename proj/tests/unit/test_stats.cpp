#include <algorithm>
#include <random>

#include "doctest.h"
#include "soei/error.hpp"
#include "soei/stats.hpp"

using namespace soei;
using doctest::Approx;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected soei::Error");
  return ErrorCode::InvalidArgument;
}

bool close_rel(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)}); }

Verdict verdict(const std::string& id, bool compliant, bool valid = true) {
  return {id, "e1", EvaluatorKind::Human, compliant, "", valid};
}

}  // namespace

TEST_CASE("special functions against reference values") {
  CHECK(stats::student_t_cdf(2.0, 5) == Approx(0.9490302605850709).epsilon(1e-10));
  CHECK(stats::student_t_cdf(-1.3, 3) == Approx(0.14223375436394847).epsilon(1e-10));
  CHECK(stats::f_sf(3.0, 2, 10) == Approx(0.095367431640625).epsilon(1e-10));
  CHECK(stats::incomplete_beta(2.5, 1.5, 0.3) == Approx(0.08894372317066562).epsilon(1e-10));
  CHECK(stats::incomplete_beta(2, 3, 0.0) == 0.0);
  CHECK(stats::incomplete_beta(2, 3, 1.0) == 1.0);
}

TEST_CASE("recognition probability") {
  std::vector<Verdict> v;
  for (int i = 0; i < 9; ++i) v.push_back(verdict(std::to_string(i), i < 7));
  CHECK(stats::recognition_probability(v) == Approx(7.0 / 9.0));
  v.push_back(verdict("bad", true, false));
  CHECK(stats::recognition_probability(v) == Approx(7.0 / 9.0));
  std::vector<Verdict> none(5, verdict("x", false));
  CHECK(stats::recognition_probability(none) == 0.0);
  CHECK(code_of([] { stats::recognition_probability({}); }) == ErrorCode::EmptyGroup);
}

TEST_CASE("recognition by evaluator and cohort") {
  std::vector<Verdict> v = {verdict("a1", true), verdict("a2", false), verdict("b1", true)};
  v.push_back({"a1", "e2", EvaluatorKind::Human, true, "", true});
  std::map<std::string, std::string> cohort = {{"a1", "a"}, {"a2", "a"}, {"b1", "b"}};
  auto groups = stats::recognition_by_group(v, cohort);
  REQUIRE(groups.size() == 3);
  CHECK(groups[0].evaluator_id == "e1");
  CHECK(groups[0].cohort == "a");
  CHECK(groups[0].probability == Approx(0.5));
}

TEST_CASE("fleiss kappa oracles") {
  // counts per item (A, B), 3 raters: P-bar = 2/3, P_e = 1/2 -> 1/3
  CHECK(stats::fleiss_kappa_counts({{3, 0}, {2, 1}, {1, 2}, {0, 3}}).kappa == Approx(1.0 / 3.0).epsilon(1e-12));
  // P-bar = 5/6, P_e = 5/9 -> 5/8
  auto k = stats::fleiss_kappa_counts({{3, 0}, {3, 0}, {2, 1}, {0, 3}});
  CHECK(std::abs(k.kappa - 0.625) < 1e-9);
  CHECK(std::abs(k.p_bar - 5.0 / 6.0) < 1e-9);
  CHECK(std::abs(k.p_e - 5.0 / 9.0) < 1e-9);

  std::vector<std::vector<std::string>> ratings = {{"1", "1", "1"}, {"1", "1", "1"}, {"1", "1", "2"}, {"2", "2", "2"}};
  CHECK(std::abs(stats::fleiss_kappa(ratings).kappa - 0.625) < 1e-9);
}

TEST_CASE("fleiss kappa is 1 under perfect agreement") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int items = 2 + static_cast<int>(rng() % 10), raters = 2 + static_cast<int>(rng() % 6);
    std::vector<std::vector<std::string>> r;
    for (int i = 0; i < items; ++i) r.emplace_back(raters, i % 2 ? "yes" : "no");
    CHECK(stats::fleiss_kappa(r).kappa == Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("fleiss kappa errors") {
  CHECK(code_of([] { stats::fleiss_kappa({{"a", "a"}, {"a", "a"}}, 2); }) == ErrorCode::DegenerateAgreement);
  CHECK(code_of([] { stats::fleiss_kappa({{"a", "b"}, {"a"}}); }) == ErrorCode::UnequalRaters);
  CHECK(code_of([] { stats::fleiss_kappa({{"a", "b"}}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("paired t on published rows") {
  std::vector<double> pre = {58.19, 16.89, 54.96, 49.86}, post = {94.31, 80.45, 94.62, 94.62};
  auto r = stats::paired_t_test(pre, post);
  CHECK(r.df == 3);
  CHECK(r.t < 0);
  CHECK(r.p_two_sided == Approx(0.005).epsilon(0.001 / 0.005));
  CHECK(std::abs(r.p_two_sided - 0.005) <= 0.001);
  std::vector<double> apre = {54.20, 15.22, 37.06, 40.55}, apost = {78.24, 67.26, 70.36, 74.19};
  CHECK(std::abs(stats::paired_t_test(apre, apost).p_two_sided - 0.009) <= 0.002);
}

TEST_CASE("paired t errors") {
  std::vector<double> a = {1, 2, 3};
  CHECK(code_of([&] { stats::paired_t_test(a, a); }) == ErrorCode::ZeroVariance);
  std::vector<double> b = {1, 2};
  CHECK(code_of([&] { stats::paired_t_test(a, b); }) == ErrorCode::LengthMismatch);
  std::vector<double> one = {1}, other = {2};
  CHECK(code_of([&] { stats::paired_t_test(one, other); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("paired t sign antisymmetry") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng() % 12;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = nd(rng);
      y[i] = nd(rng) + 0.3;
    }
    auto f = stats::paired_t_test(x, y);
    auto b = stats::paired_t_test(y, x);
    CHECK(f.t == Approx(-b.t).epsilon(1e-12));
    CHECK(f.p_two_sided == Approx(b.p_two_sided).epsilon(1e-12));
    CHECK(f.mean_difference == Approx(-b.mean_difference).epsilon(1e-12));
    CHECK(f.p_two_sided >= 0.0);
    CHECK(f.p_two_sided <= 1.0);
  }
}

TEST_CASE("one-way anova hand oracle") {
  // means 0.1 and 1.1 around 0.6: SS_between 1.0, SS_within 4 * 0.01
  auto r = stats::one_way_anova({{0.0, 0.2}, {1.0, 1.2}});
  CHECK(r.row("Between").ss == Approx(1.0).epsilon(1e-12));
  CHECK(r.row("Within").ss == Approx(0.04).epsilon(1e-12));
  CHECK(*r.row("Between").f == Approx(50.0).epsilon(1e-10));
  CHECK(*r.row("Between").p == Approx(0.019419324309079847).epsilon(1e-8));
  CHECK(r.df_total == 3);
  CHECK(code_of([] { stats::one_way_anova({{1, 1}, {1, 1}}); }) == ErrorCode::DegenerateVariance);
  CHECK(code_of([] { stats::one_way_anova({{1, 2}}); }) == ErrorCode::TooFewGroups);
  CHECK(code_of([] { stats::one_way_anova({{1, 2}, {}}); }) == ErrorCode::EmptyGroup);
}

TEST_CASE("two-way anova structural cases") {
  // additive cell means -> no interaction
  std::vector<std::vector<std::vector<double>>> cells;
  const double a_eff[] = {0.0, 1.0, 3.0}, b_eff[] = {0.0, 2.0};
  const double noise[] = {-0.1, 0.1};
  for (double a : a_eff) {
    auto& row = cells.emplace_back();
    for (double b : b_eff) row.push_back({a + b + noise[0], a + b + noise[1]});
  }
  auto r = stats::two_way_anova(cells, "A", "B");
  CHECK(std::abs(r.row("A:B").ss) < 1e-12);
  CHECK(r.row("Residual").df == 6);

  auto bad = cells;
  bad[1][1].push_back(0.5);
  CHECK(code_of([&] { stats::two_way_anova(bad); }) == ErrorCode::UnbalancedDesign);
  CHECK(code_of([] { stats::two_way_anova({{{1, 2}, {3, 4}}}); }) == ErrorCode::TooFewGroups);
}

TEST_CASE("anova sums of squares decompose on random balanced designs") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int a = 2 + static_cast<int>(rng() % 4), b = 2 + static_cast<int>(rng() % 3),
              n = 2 + static_cast<int>(rng() % 5);
    std::vector<std::vector<std::vector<double>>> cells(a, std::vector<std::vector<double>>(b));
    std::vector<std::vector<double>> groups;
    for (int i = 0; i < a; ++i) {
      for (int j = 0; j < b; ++j) {
        for (int k = 0; k < n; ++k) cells[i][j].push_back(nd(rng) * 2.0 + i - 0.5 * j);
        groups.push_back(cells[i][j]);
      }
    }
    auto two = stats::two_way_anova(cells);
    double sum = 0.0;
    int df = 0;
    for (const auto& row : two.rows) {
      sum += row.ss;
      df += row.df;
      CHECK(row.ss >= -1e-12);
    }
    CHECK(close_rel(sum, two.ss_total, 1e-9));
    CHECK(df == two.df_total);

    auto one = stats::one_way_anova(groups);
    CHECK(close_rel(one.row("Between").ss + one.row("Within").ss, one.ss_total, 1e-9));
    CHECK(close_rel(one.ss_total, two.ss_total, 1e-9));
  }
}

TEST_CASE("position weights") {
  CHECK(stats::position_weight(1) == 1.0);
  CHECK(stats::position_weight(2) == Approx(0.8));
  CHECK(stats::position_weight(3) == Approx(0.6));
  CHECK(stats::position_weight(4) == Approx(0.4));
  CHECK(stats::position_weight(5) == Approx(0.2));
  CHECK(stats::position_weight(std::nullopt) == 0.0);
  CHECK(code_of([] { stats::position_weight(6); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { stats::position_weight(0); }) == ErrorCode::InvalidArgument);

  std::vector<TraitCode> r = {TraitCode::HA, TraitCode::HE, TraitCode::HN, TraitCode::LO, TraitCode::LC};
  CHECK(stats::ranking_score(r, TraitCode::HA) == 1.0);
  CHECK(stats::ranking_score(r, TraitCode::HE) == Approx(0.8));
  std::vector<TraitCode> partial = {TraitCode::HE, TraitCode::HN};
  CHECK(stats::ranking_score(partial, TraitCode::HA) == 0.0);
}

TEST_CASE("top-k accuracy") {
  RankingPrediction hit{1, {TraitCode::HA, TraitCode::LO}, TraitCode::HA, 1.0};
  RankingPrediction second{3, {TraitCode::HA, TraitCode::LO}, TraitCode::LO, 0.8};
  std::vector<RankingPrediction> p = {hit, second};
  CHECK(stats::topk_accuracy(p, 1) == Approx(0.5));
  CHECK(stats::topk_accuracy(p, 2) == 1.0);
  CHECK(stats::topk_accuracy(p, 3) == 1.0);
  CHECK(code_of([] { stats::topk_accuracy({}, 1); }) == ErrorCode::EmptyPredictions);
  CHECK(code_of([&] { stats::topk_accuracy(p, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("ranking score properties over random prediction sets") {
  std::mt19937_64 rng(99);
  std::vector<TraitCode> all(kAllTraits.begin(), kAllTraits.end());
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<RankingPrediction> preds;
    const int n = 1 + static_cast<int>(rng() % 20);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      auto order = all;
      std::shuffle(order.begin(), order.end(), rng);
      order.resize(rng() % 6);
      const auto truth = all[rng() % 5];
      RankingPrediction p{i, order, truth, stats::ranking_score(order, truth)};
      CHECK(p.score >= 0.0);
      CHECK(p.score <= 1.0);
      sum += p.score;
      preds.push_back(p);
    }
    const double t1 = stats::topk_accuracy(preds, 1), t2 = stats::topk_accuracy(preds, 2),
                 t3 = stats::topk_accuracy(preds, 3);
    CHECK(t1 <= t2);
    CHECK(t2 <= t3);
    const double mean = sum / n;
    CHECK(mean >= 0.0);
    CHECK(mean <= 1.0);
  }
}

TEST_CASE("score matrix and trajectories") {
  std::vector<stats::ScoredTurn> turns = {{"P1", TraitCode::HN, 1.0}, {"P1", TraitCode::HN, 0.6},
                                          {"P1", TraitCode::HN, 0.0}, {"P2", TraitCode::HA, 0.8}};
  auto m = stats::score_matrix(turns);
  CHECK(m.cols == std::vector<std::string>{"P1", "P2"});
  REQUIRE(m.rows.size() == 2);
  CHECK(m.rows[0] == "HN");
  CHECK(m.values[0][0].value() == Approx(0.5333333333));
  CHECK_FALSE(m.values[0][1].has_value());
  CHECK(m.row_means()[0] == Approx(0.5333333333));

  CHECK(stats::row_means({{0.48, 0.66, 0.61, 0.54, 0.61, 0.62, 0.45, 0.58, 0.56, 0.63}})[0] == Approx(0.574));
  CHECK(code_of([] { stats::row_means({{}}); }) == ErrorCode::EmptyGroup);

  std::vector<RankingPrediction> p = {{5, {}, TraitCode::HN, 0.2}, {1, {}, TraitCode::HN, 1.0}};
  auto traj = stats::trajectory(p);
  REQUIRE(traj.size() == 2);
  CHECK(traj[0].first == 1);
  CHECK(traj[1].second == Approx(0.2));
}

TEST_CASE("distribution summary") {
  std::vector<double> xs = {1, 2, 3, 4, 100};
  auto s = stats::distribution_summary(xs);
  CHECK(s.q1 == Approx(2));
  CHECK(s.median == Approx(3));
  CHECK(s.q3 == Approx(4));
  CHECK(s.outliers == std::vector<double>{100});
  CHECK(s.max == Approx(4));
  CHECK(s.min == Approx(1));
  std::vector<double> flat(6, 0.7);
  auto f = stats::distribution_summary(flat);
  CHECK(f.q3 - f.q1 == 0.0);
  CHECK(f.outliers.empty());
}
