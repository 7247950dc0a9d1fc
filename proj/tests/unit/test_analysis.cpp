#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cfgreject/analysis.hpp"

using namespace cfgreject;

TEST(Ranks, AverageTies) {
  const std::vector<double> v{10, 20, 20, 5};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(Correlation, HandComputedSpearman) {
  const std::vector<double> a{1, 2, 3, 4}, b{1, 3, 2, 4};
  EXPECT_NEAR(correlation(a, b, CorrelationMethod::spearman), 0.8, 1e-15);
  const std::vector<double> up{1, 4, 9, 16}, down{16, 9, 4, 1};
  EXPECT_NEAR(correlation(a, up, CorrelationMethod::spearman), 1.0, 1e-15);
  EXPECT_NEAR(correlation(a, down, CorrelationMethod::spearman), -1.0, 1e-15);
  EXPECT_LT(correlation(a, up, CorrelationMethod::pearson), 1.0);
}

TEST(Correlation, SpearmanIgnoresMonotoneTransforms) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<double> x, y, ex, cy;
  for (int i = 0; i < 300; ++i) {
    x.push_back(g(rng));
    y.push_back(x.back() + g(rng));
    ex.push_back(std::exp(x.back()));
    cy.push_back(y.back() * y.back() * y.back());
  }
  EXPECT_NEAR(correlation(x, y, CorrelationMethod::spearman),
              correlation(ex, cy, CorrelationMethod::spearman), 1e-12);
}

TEST(Correlation, Errors) {
  const std::vector<double> a{1, 2, 3}, flat{2, 2, 2}, short_{1, 2};
  EXPECT_THROW(correlation(a, flat, CorrelationMethod::pearson), std::invalid_argument);
  EXPECT_THROW(correlation(a, short_, CorrelationMethod::spearman), std::invalid_argument);
  EXPECT_THROW(correlation(std::vector<double>{1}, std::vector<double>{1},
                           CorrelationMethod::pearson),
               std::invalid_argument);
}

TEST(LeastSquares, ExactLine) {
  const std::vector<double> x{0, 1, 2, 5}, y{1, 3, 5, 11};
  const auto fit = least_squares(x, y);
  EXPECT_NEAR(fit.slope, 2.0, 1e-14);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-14);
  EXPECT_NEAR(fit.r2, 1.0, 1e-14);
  EXPECT_EQ(least_squares(x, std::vector<double>{4, 4, 4, 4}).r2, 1.0);
  EXPECT_THROW(least_squares(std::vector<double>{1, 1}, std::vector<double>{0, 1}),
               std::invalid_argument);
}

TEST(LeastSquares, ResidualsAreOrthogonal) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  std::vector<double> x, y;
  for (int i = 0; i < 200; ++i) {
    x.push_back(g(rng));
    y.push_back(0.5 * x.back() - 2.0 + g(rng));
  }
  const auto fit = least_squares(x, y);
  double sum = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    sum += r;
    cross += r * x[i];
  }
  EXPECT_NEAR(sum, 0.0, 1e-10);
  EXPECT_NEAR(cross, 0.0, 1e-10);
  const double rho = correlation(x, y, CorrelationMethod::pearson);
  EXPECT_NEAR(fit.r2, rho * rho, 1e-12);
}

TEST(BinnedCurve, RecoversLinearRelation) {
  std::vector<double> asd, logp;
  for (int i = 0; i <= 1000; ++i) {
    asd.push_back(i / 100.0);
    logp.push_back(2.0 * asd.back() + 1.0);
  }
  const auto curve = binned_asd_density_curve(asd, logp, 20);
  EXPECT_EQ(curve.bin_edges.size(), 21u);
  EXPECT_EQ(curve.nonempty_bins(), 20u);
  EXPECT_NEAR(curve.fit_slope, 2.0, 1e-12);
  EXPECT_NEAR(curve.fit_intercept, 1.0, 1e-12);
  EXPECT_NEAR(curve.fit_r2, 1.0, 1e-12);
  std::size_t total = 0;
  for (auto c : curve.bin_counts) total += c;
  EXPECT_EQ(total, asd.size());
}

TEST(BinnedCurve, LogAxisAndDegenerateInput) {
  // Zero ASD is dropped on the log axis; the rest land one per bin.
  std::vector<double> asd{0.0, 1.0, std::exp(1.5), std::exp(3.0)};
  std::vector<double> logp{9.0, 0.0, 1.5, 3.0};
  const auto curve = binned_asd_density_curve(asd, logp, 3, AsdAxis::log);
  EXPECT_EQ(curve.bin_counts, (std::vector<std::size_t>{1, 1, 1}));
  EXPECT_NEAR(curve.fit_slope, 1.0, 1e-12);

  const std::vector<double> same{2.0, 2.0, 2.0};
  EXPECT_THROW(binned_asd_density_curve(same, same, 5), std::invalid_argument);
  EXPECT_THROW(binned_asd_density_curve(asd, logp, 1), std::invalid_argument);
}

TEST(RankProfiles, SplitsByAsd) {
  const auto dist = build_fractal_mixture(FractalConfig{}, 2);
  const auto pts = sample_data(dist, 0, 400, 12);
  std::vector<double> logp, asd;
  for (const auto& p : pts) {
    logp.push_back(noisy_log_density(dist, p, 0.0, 0));
    asd.push_back(std::exp(logp.back()));  // an ASD proxy aligned with density
  }
  const auto one = rank_density_profiles(pts, asd, logp, 1, DensityEstimator::avg_knn);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].indices.size(), pts.size());

  const auto four = rank_density_profiles(pts, asd, logp, 4, DensityEstimator::avg_knn, 5, 2);
  ASSERT_EQ(four.size(), 4u);
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_EQ(four[r].rank, r);
    EXPECT_EQ(four[r].indices.size(), 100u);
  }
  EXPECT_LT(four[0].mean_score, four[3].mean_score);
  EXPECT_GT(four[0].mean_log_density, four[3].mean_log_density);
  const auto lof = rank_density_profiles(pts, asd, logp, 4, DensityEstimator::lof);
  EXPECT_LT(lof[0].mean_score, lof[3].mean_score);
  EXPECT_THROW(rank_density_profiles(pts, asd, logp, 401, DensityEstimator::lof),
               std::invalid_argument);
}

TEST(Budget, AffordableCandidates) {
  const auto dist = build_fractal_mixture(FractalConfig{}, 2);
  const Sampler sampler(dist, make_schedule(32, 0.002, 80.0, 7.0), {2.0}, Solver::heun);
  const RejectionPolicy policy{9, 0.1};
  const std::size_t full = 126, prefix = 40;
  for (std::size_t budget : {126u, 500u, 5000u, 77777u}) {
    const std::size_t n = affordable_rejection_candidates(sampler, policy, budget);
    auto cost = [&](std::size_t m) { return m * prefix + keep_count(m, 0.1) * (full - prefix); };
    EXPECT_LE(cost(n), budget);
    EXPECT_GT(cost(n + 1), budget);
    EXPECT_GE(n, budget / full);
  }
}

TEST(Budget, ComparisonRespectsBudget) {
  const auto dist = build_fractal_mixture(FractalConfig{}, 2);
  const Sampler sampler(dist, make_schedule(16, 0.002, 80.0, 7.0), {2.0}, Solver::heun);
  const std::size_t full = full_nfe(sampler.schedule(), Solver::heun);
  const RejectionPolicy policy{4, 0.25};

  const auto single = budget_comparison(sampler, 0, full, policy, 3);
  EXPECT_EQ(single.best_of_n.candidate_count, 1u);
  EXPECT_GE(single.cfg_rejection.candidate_count, 1u);
  EXPECT_EQ(single.best_of_n.selected_count, single.cfg_rejection.selected_count);

  const std::size_t budget = 40 * full;
  const auto cmp = budget_comparison(sampler, 1, budget, policy, 4, 2);
  EXPECT_LE(cmp.cfg_rejection.nfe_used, budget);
  EXPECT_LE(cmp.best_of_n.nfe_used, budget);
  EXPECT_GE(cmp.cfg_rejection.candidate_count, cmp.best_of_n.candidate_count);
  EXPECT_EQ(cmp.best_of_n.selected_count, cmp.cfg_rejection.selected_count);
  EXPECT_EQ(cmp.cfg_rejection.mean_final_quality_proxy, cmp.cfg_rejection.mean_true_log_density);
  EXPECT_THROW(budget_comparison(sampler, 0, full - 1, policy, 3), std::invalid_argument);
}
