#include "cfgreject/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cfgreject/density.hpp"
#include "cfgreject/rejection.hpp"

namespace cfgreject {

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = rank;
    i = j + 1;
  }
  return ranks;
}

namespace {

double pearson(std::span<const double> xs, std::span<const double> ys) {
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw std::invalid_argument("correlation is undefined for zero-variance input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double finite_mean(std::span<const double> values) {
  double total = 0.0;
  for (double v : values) total += v;
  return values.empty() ? std::numeric_limits<double>::quiet_NaN()
                        : total / static_cast<double>(values.size());
}

}  // namespace

double correlation(std::span<const double> xs, std::span<const double> ys,
                   CorrelationMethod method) {
  if (xs.size() != ys.size()) throw std::invalid_argument("correlation inputs differ in length");
  if (xs.size() < 2) throw std::invalid_argument("correlation needs at least two pairs");
  if (method == CorrelationMethod::pearson) return pearson(xs, ys);
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

LinearFit least_squares(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("fit inputs differ in length");
  if (xs.size() < 2) throw std::invalid_argument("fit needs at least two points");
  const double mx = finite_mean(xs);
  const double my = finite_mean(ys);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit needs at least two distinct x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

std::size_t BinnedCurve::nonempty_bins() const {
  return static_cast<std::size_t>(
      std::count_if(bin_counts.begin(), bin_counts.end(), [](std::size_t c) { return c > 0; }));
}

BinnedCurve binned_asd_density_curve(std::span<const double> asd,
                                     std::span<const double> log_density, std::size_t n_bins,
                                     AsdAxis axis) {
  if (asd.size() != log_density.size()) {
    throw std::invalid_argument("ASD and log-density arrays differ in length");
  }
  if (n_bins < 2) throw std::invalid_argument("analysis.n_bins: must be >= 2");

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < asd.size(); ++i) {
    double x = asd[i];
    if (axis == AsdAxis::log) x = x > 0.0 ? std::log(x) : std::numeric_limits<double>::quiet_NaN();
    if (std::isfinite(x) && std::isfinite(log_density[i])) {
      xs.push_back(x);
      ys.push_back(log_density[i]);
    }
  }
  if (xs.empty()) throw std::invalid_argument("binned curve needs at least two nonempty bins");
  const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) throw std::invalid_argument("binned curve needs at least two nonempty bins");

  BinnedCurve curve;
  curve.axis = axis;
  const double width = (hi - lo) / static_cast<double>(n_bins);
  curve.bin_edges.resize(n_bins + 1);
  for (std::size_t b = 0; b <= n_bins; ++b) curve.bin_edges[b] = lo + width * static_cast<double>(b);
  curve.bin_edges.back() = hi;

  std::vector<double> sum_x(n_bins, 0.0), sum_y(n_bins, 0.0);
  curve.bin_counts.assign(n_bins, 0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    auto b = static_cast<std::size_t>((xs[i] - lo) / width);
    b = std::min(b, n_bins - 1);
    sum_x[b] += xs[i];
    sum_y[b] += ys[i];
    ++curve.bin_counts[b];
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  curve.bin_mean_x.assign(n_bins, nan);
  curve.bin_mean_y.assign(n_bins, nan);
  std::vector<double> fx, fy;
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (curve.bin_counts[b] == 0) continue;
    const double c = static_cast<double>(curve.bin_counts[b]);
    curve.bin_mean_x[b] = sum_x[b] / c;
    curve.bin_mean_y[b] = sum_y[b] / c;
    fx.push_back(curve.bin_mean_x[b]);
    fy.push_back(curve.bin_mean_y[b]);
  }
  if (fx.size() < 2) throw std::invalid_argument("binned curve needs at least two nonempty bins");

  const LinearFit fit = least_squares(fx, fy);
  curve.fit_slope = fit.slope;
  curve.fit_intercept = fit.intercept;
  curve.fit_r2 = fit.r2;
  return curve;
}

std::vector<RankProfile> rank_density_profiles(std::span<const Vec2> points,
                                               std::span<const double> asd,
                                               std::span<const double> log_density,
                                               std::size_t n_ranks, DensityEstimator estimator,
                                               std::size_t k, std::size_t threads) {
  const std::size_t n = points.size();
  if (asd.size() != n || log_density.size() != n) {
    throw std::invalid_argument("rank profiles need equally sized inputs");
  }
  if (n_ranks < 1) throw std::invalid_argument("analysis.n_ranks: must be >= 1");
  if (n < n_ranks) throw std::invalid_argument("fewer samples than ranks");

  const std::vector<double> scores = estimator == DensityEstimator::avg_knn
                                         ? avg_knn_scores(points, k, threads)
                                         : lof_scores(points, k, threads);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return asd[a] > asd[b]; });

  std::vector<RankProfile> profiles(n_ranks);
  for (std::size_t r = 0; r < n_ranks; ++r) {
    auto& p = profiles[r];
    p.rank = r;
    const std::size_t begin = r * n / n_ranks;
    const std::size_t end = (r + 1) * n / n_ranks;
    double density_total = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      p.indices.push_back(order[i]);
      p.scores.push_back(scores[order[i]]);
      density_total += log_density[order[i]];
    }
    p.mean_score = finite_mean(p.scores);
    p.mean_log_density = density_total / static_cast<double>(end - begin);
  }
  return profiles;
}

std::size_t affordable_rejection_candidates(const Sampler& sampler, const RejectionPolicy& policy,
                                            std::size_t nfe_budget) {
  const std::size_t full = full_nfe(sampler.schedule(), sampler.solver());
  const std::size_t prefix = prefix_nfe(sampler.schedule(), sampler.solver(), policy.tau + 1);
  auto cost = [&](std::size_t n) {
    return n * prefix + keep_count(n, policy.keep_percentile) * (full - prefix);
  };
  // cost(n) is nondecreasing in n.
  std::size_t n = 0;
  while (cost(n + 1) <= nfe_budget) ++n;
  return n;
}

namespace {

double mean_log_density(const MixtureDistribution& dist, ClassLabel label,
                        const std::vector<Trajectory>& trajectories,
                        std::span<const std::size_t> selected) {
  const NoisyMixture clean(dist, 0.0);
  const std::size_t ci = dist.class_index(label);
  double total = 0.0;
  for (std::size_t i : selected) total += clean.conditional(trajectories[i].current(), ci).log_density;
  return total / static_cast<double>(selected.size());
}

}  // namespace

BudgetComparison budget_comparison(const Sampler& sampler, ClassLabel label,
                                   std::size_t nfe_budget, const RejectionPolicy& policy,
                                   std::uint64_t seed, std::size_t threads) {
  const std::size_t full = full_nfe(sampler.schedule(), sampler.solver());
  if (nfe_budget < full) {
    throw std::invalid_argument("budget of " + std::to_string(nfe_budget) +
                                " evaluations cannot finish a single trajectory (needs " +
                                std::to_string(full) + ")");
  }
  BudgetComparison out;

  const std::size_t n_reject = affordable_rejection_candidates(sampler, policy, nfe_budget);
  const auto reject_pool = make_candidates(label, n_reject, seed);
  const FilterResult filtered =
      filter_batch(sampler, reject_pool, policy, FilterMode::two_pass, std::nullopt, threads);
  auto& cr = out.cfg_rejection;
  cr.method = BudgetMethod::cfg_rejection;
  cr.nfe_budget = nfe_budget;
  cr.nfe_used = filtered.nfe.total_nfe;
  cr.candidate_count = n_reject;
  cr.selected_count = filtered.accepted.size();
  cr.mean_true_log_density =
      mean_log_density(sampler.distribution(), label, filtered.trajectories, filtered.accepted);
  cr.mean_final_quality_proxy = cr.mean_true_log_density;

  const std::size_t n_best = nfe_budget / full;
  const auto best_pool = make_candidates(label, n_best, seed);
  const auto trajectories = sampler.sample_batch(best_pool, threads);
  const auto finals = [&] {
    std::vector<Vec2> pts;
    for (const auto& t : trajectories) pts.push_back(t.current());
    return pts;
  }();
  const auto quality = true_log_density_batch(sampler.distribution(), finals, label);
  std::vector<std::size_t> order(n_best);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return quality[a] > quality[b]; });
  order.resize(std::min(cr.selected_count, n_best));

  auto& bn = out.best_of_n;
  bn.method = BudgetMethod::best_of_n;
  bn.nfe_budget = nfe_budget;
  bn.nfe_used = n_best * full;
  bn.candidate_count = n_best;
  bn.selected_count = order.size();
  bn.mean_true_log_density = mean_log_density(sampler.distribution(), label, trajectories, order);
  bn.mean_final_quality_proxy = bn.mean_true_log_density;
  return out;
}

std::string to_string(BudgetMethod method) {
  return method == BudgetMethod::cfg_rejection ? "cfg_rejection" : "best_of_n";
}

}  // namespace cfgreject
