#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cfgreject/asd.hpp"
#include "cfgreject/distribution.hpp"
#include "cfgreject/sampler.hpp"

namespace cfgreject {

enum class CorrelationMethod { pearson, spearman };

/// 1-based ranks, ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson or Spearman correlation. Throws std::invalid_argument for
/// mismatched or too-short inputs and for zero variance.
double correlation(std::span<const double> xs, std::span<const double> ys,
                   CorrelationMethod method);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;  // 1 when ys are constant
};

/// Ordinary least squares y = intercept + slope * x. Throws
/// std::invalid_argument for fewer than two points or constant xs.
LinearFit least_squares(std::span<const double> xs, std::span<const double> ys);

/// Scale on which ASD is binned. `log` bins log(ASD) and is only meaningful
/// for strictly positive ASD values.
enum class AsdAxis { linear, log };

struct BinnedCurve {
  AsdAxis axis = AsdAxis::linear;
  std::vector<double> bin_edges;    // n_bins + 1, strictly increasing
  std::vector<double> bin_mean_x;   // NaN for empty bins
  std::vector<double> bin_mean_y;   // NaN for empty bins
  std::vector<std::size_t> bin_counts;
  double fit_slope = 0.0;
  double fit_intercept = 0.0;
  double fit_r2 = 0.0;

  std::size_t nonempty_bins() const;
};

/// Equal-width bins over the ASD range, per-bin means, and an ordinary least
/// squares line through the nonempty bin means. Non-finite samples (and
/// non-positive ASD on the log axis) are discarded. Throws when fewer than
/// two bins are populated.
BinnedCurve binned_asd_density_curve(std::span<const double> asd,
                                     std::span<const double> log_density,
                                     std::size_t n_bins = 50, AsdAxis axis = AsdAxis::linear);

enum class DensityEstimator { avg_knn, lof };

struct RankProfile {
  std::size_t rank = 0;                // 0 = highest ASD
  std::vector<std::size_t> indices;    // into the input arrays
  std::vector<double> scores;          // estimator score of each member
  double mean_score = 0.0;
  double mean_log_density = 0.0;
};

/// Sorts samples by ASD (descending), splits them into n_ranks equal groups
/// and reports each group's estimator scores, computed against the pooled set.
std::vector<RankProfile> rank_density_profiles(std::span<const Vec2> points,
                                               std::span<const double> asd,
                                               std::span<const double> log_density,
                                               std::size_t n_ranks, DensityEstimator estimator,
                                               std::size_t k = 5, std::size_t threads = 0);

enum class BudgetMethod { cfg_rejection, best_of_n };

struct BudgetReport {
  BudgetMethod method = BudgetMethod::cfg_rejection;
  std::size_t nfe_budget = 0;
  std::size_t nfe_used = 0;
  std::size_t candidate_count = 0;
  std::size_t selected_count = 0;
  double mean_true_log_density = 0.0;
  /// Quality signal standing in for a preference score; equal to the mean
  /// true conditional log-density of the selection.
  double mean_final_quality_proxy = 0.0;
};

struct BudgetComparison {
  BudgetReport cfg_rejection;
  BudgetReport best_of_n;
};

/// Largest candidate pool CFG-Rejection can afford: N * prefix + keep(N) *
/// (full - prefix) <= budget.
std::size_t affordable_rejection_candidates(const Sampler& sampler, const RejectionPolicy& policy,
                                            std::size_t nfe_budget);

/// Spends `nfe_budget` score evaluations two ways. CFG-Rejection starts as
/// many candidates as early termination allows and keeps those passing the
/// two-pass threshold. Best-of-N fully denoises floor(budget / full) candidates
/// and keeps the same number by highest true log-density. Both draw from the
/// candidate stream rooted at `seed`.
BudgetComparison budget_comparison(const Sampler& sampler, ClassLabel label,
                                   std::size_t nfe_budget, const RejectionPolicy& policy,
                                   std::uint64_t seed, std::size_t threads = 0);

std::string to_string(BudgetMethod method);

}  // namespace cfgreject
