#include "cfgreject/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "cfgreject/parallel.hpp"
#include "cfgreject/svg.hpp"

namespace cfgreject {

using nlohmann::json;

namespace {

// Budget comparisons draw from a stream disjoint from the main batch.
constexpr std::uint64_t kBudgetStream = 0x6275646765745f31ULL;

std::optional<double> safe_correlation(const std::vector<double>& xs,
                                       const std::vector<double>& ys, CorrelationMethod method) {
  if (xs.size() < 3) return std::nullopt;
  try {
    return correlation(xs, ys, method);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

std::optional<BinnedCurve> safe_curve(const std::vector<double>& asd,
                                      const std::vector<double>& logd, std::size_t n_bins,
                                      AsdAxis axis) {
  if (asd.size() < 3) return std::nullopt;
  try {
    return binned_asd_density_curve(asd, logd, n_bins, axis);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

// Positions of the k largest values (ties broken by position), ascending.
std::vector<std::size_t> top_k(const std::vector<double>& values, std::size_t k) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  order.resize(std::min(k, order.size()));
  std::sort(order.begin(), order.end());
  return order;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json curve_json(const std::optional<BinnedCurve>& c) {
  if (!c) return json(nullptr);
  return {{"slope", c->fit_slope},
          {"intercept", c->fit_intercept},
          {"r2", c->fit_r2},
          {"nonempty_bins", c->nonempty_bins()}};
}

json report_json(const BudgetReport& r) {
  return {{"nfe_budget", r.nfe_budget},
          {"nfe_used", r.nfe_used},
          {"candidate_count", r.candidate_count},
          {"selected_count", r.selected_count},
          {"mean_true_log_density", r.mean_true_log_density},
          {"mean_final_quality_proxy", r.mean_final_quality_proxy}};
}

}  // namespace

MixtureDistribution resolve_distribution(const ExperimentConfig& config) {
  if (config.distribution_file) return load_mixture(*config.distribution_file);
  return build_fractal_mixture(config.fractal, config.num_classes);
}

NoiseSchedule make_schedule(const ScheduleConfig& s) {
  return make_schedule(s.steps, s.sigma_min, s.sigma_max, s.rho);
}

std::vector<Candidate> experiment_candidates(const MixtureDistribution& dist,
                                             const ExperimentConfig& config) {
  std::vector<Candidate> out;
  for (std::size_t ci = 0; ci < dist.num_classes(); ++ci) {
    const auto part = make_candidates(dist.classes()[ci].label, config.num_samples,
                                      derive_seed(config.master_seed, ci));
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

SampleRun sample_all(const MixtureDistribution& dist, const ExperimentConfig& config,
                     double omega) {
  const Sampler sampler(dist, make_schedule(config.schedule), {omega, config.scaling},
                        config.solver);
  SampleRun run;
  run.trajectories = sampler.sample_batch(experiment_candidates(dist, config), config.threads);
  run.records = make_records(run.trajectories, config.policy.tau);
  return run;
}

OmegaSummary summarize(const ExperimentConfig& config, double omega,
                       std::span<const SampleRecord> records) {
  OmegaSummary s;
  s.omega = omega;
  s.num_records = records.size();

  const NoiseSchedule schedule = make_schedule(config.schedule);
  const std::size_t full = full_nfe(schedule, config.solver);
  const std::size_t prefix =
      config.policy.tau + 1 <= schedule.steps()
          ? prefix_nfe(schedule, config.solver, config.policy.tau + 1)
          : full;

  std::vector<double> all_asd, all_logd, all_partial, all_full;
  std::map<ClassLabel, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    by_class[r.label].push_back(i);
    if (!r.finished()) continue;
    ++s.num_finished;
    if (r.asd_full && r.true_log_density) {
      all_asd.push_back(*r.asd_full);
      all_logd.push_back(*r.true_log_density);
    }
    if (r.asd_full && r.asd_partial) {
      all_partial.push_back(*r.asd_partial);
      all_full.push_back(*r.asd_full);
    }
  }
  s.spearman_asd_logdensity = safe_correlation(all_asd, all_logd, CorrelationMethod::spearman);
  s.pearson_asd_logdensity = safe_correlation(all_asd, all_logd, CorrelationMethod::pearson);
  s.curve = safe_curve(all_asd, all_logd, config.analysis.n_bins, AsdAxis::linear);
  s.curve_log = safe_curve(all_asd, all_logd, config.analysis.n_bins, AsdAxis::log);
  s.partial_full_spearman = safe_correlation(all_partial, all_full, CorrelationMethod::spearman);

  std::size_t overlap_hits = 0, overlap_total = 0;
  double cost_total = 0.0, full_total = 0.0, predicted_saved = 0.0;
  for (const auto& [label, members] : by_class) {
    ClassSummary cs;
    cs.label = label;
    cs.count = members.size();

    std::vector<double> asd, logd, partial, fullv;
    std::vector<double> partial_all;
    for (std::size_t i : members) {
      const auto& r = records[i];
      if (r.asd_partial) partial_all.push_back(*r.asd_partial);
      if (!r.finished()) continue;
      ++cs.finished;
      if (r.asd_full && r.true_log_density) {
        asd.push_back(*r.asd_full);
        logd.push_back(*r.true_log_density);
      }
      if (r.asd_full && r.asd_partial) {
        partial.push_back(*r.asd_partial);
        fullv.push_back(*r.asd_full);
      }
    }
    cs.spearman_asd_logdensity = safe_correlation(asd, logd, CorrelationMethod::spearman);
    cs.partial_full_spearman = safe_correlation(partial, fullv, CorrelationMethod::spearman);

    if (!partial.empty()) {
      const std::size_t k = keep_count(partial.size(), config.policy.keep_percentile);
      const auto by_partial = top_k(partial, k);
      const auto by_full = top_k(fullv, k);
      std::vector<std::size_t> common;
      std::set_intersection(by_partial.begin(), by_partial.end(), by_full.begin(), by_full.end(),
                            std::back_inserter(common));
      cs.top_keep_overlap = static_cast<double>(common.size()) / static_cast<double>(k);
      overlap_hits += common.size();
      overlap_total += k;
    }

    if (!partial_all.empty() && partial_all.size() == members.size()) {
      const double gamma = resolve_threshold(partial_all, config.policy.keep_percentile);
      cs.gamma = gamma;
      double cost = 0.0;
      std::size_t rejected = 0;
      for (std::size_t i : members) {
        const auto& r = records[i];
        if (*r.asd_partial >= gamma) {
          ++cs.accepted;
          cost += static_cast<double>(r.nfe);
        } else {
          ++rejected;
          cost += static_cast<double>(std::min(r.nfe, prefix));
        }
      }
      const double batch_full = static_cast<double>(members.size() * full);
      cs.nfe_saved_fraction = 1.0 - cost / batch_full;
      cs.predicted_nfe_saved_fraction =
          static_cast<double>(rejected * (full - prefix)) / batch_full;
      cost_total += cost;
      full_total += batch_full;
      predicted_saved += static_cast<double>(rejected * (full - prefix));
    }
    s.classes.push_back(cs);

    // Rank profiles against this class's own finished samples.
    std::vector<Vec2> pts;
    std::vector<double> rank_asd, rank_logd;
    for (std::size_t i : members) {
      const auto& r = records[i];
      if (r.finished() && r.asd_full && r.true_log_density) {
        pts.push_back(*r.position);
        rank_asd.push_back(*r.asd_full);
        rank_logd.push_back(*r.true_log_density);
      }
    }
    if (pts.size() >= config.analysis.n_ranks && pts.size() > config.density.k) {
      for (auto est : {DensityEstimator::avg_knn, DensityEstimator::lof}) {
        auto profiles = rank_density_profiles(pts, rank_asd, rank_logd, config.analysis.n_ranks,
                                              est, config.density.k, config.threads);
        for (auto& p : profiles) {
          RankRow row;
          row.label = label;
          row.estimator = est;
          row.asd_min = INFINITY;
          row.asd_max = -INFINITY;
          for (std::size_t j : p.indices) {
            row.asd_min = std::min(row.asd_min, rank_asd[j]);
            row.asd_max = std::max(row.asd_max, rank_asd[j]);
          }
          row.profile = std::move(p);
          s.ranks.push_back(std::move(row));
        }
      }
    }
  }
  if (overlap_total > 0) {
    s.top_keep_overlap = static_cast<double>(overlap_hits) / static_cast<double>(overlap_total);
  }
  if (full_total > 0.0) {
    s.nfe_saved_fraction = 1.0 - cost_total / full_total;
    s.predicted_nfe_saved_fraction = predicted_saved / full_total;
  }
  return s;
}

void add_budget_comparisons(OmegaSummary& summary, const MixtureDistribution& dist,
                            const ExperimentConfig& config) {
  const Sampler sampler(dist, make_schedule(config.schedule), {summary.omega, config.scaling},
                        config.solver);
  const std::size_t full = full_nfe(sampler.schedule(), sampler.solver());
  const auto scaled = static_cast<std::size_t>(std::floor(
      config.analysis.budget_fraction * static_cast<double>(config.num_samples * full)));
  const std::size_t budget = std::max(full, scaled);
  summary.budgets.clear();
  for (std::size_t ci = 0; ci < dist.num_classes(); ++ci) {
    const ClassLabel label = dist.classes()[ci].label;
    summary.budgets.emplace_back(
        label, budget_comparison(sampler, label, budget, config.policy,
                                 derive_seed(config.master_seed ^ kBudgetStream, ci),
                                 config.threads));
  }
}

json summary_to_json(const OmegaSummary& s) {
  json classes = json::array();
  for (const auto& c : s.classes) {
    json ranks_knn = json::array(), ranks_lof = json::array(), ranks_logd = json::array();
    for (const auto& r : s.ranks) {
      if (r.label != c.label) continue;
      if (r.estimator == DensityEstimator::avg_knn) {
        ranks_knn.push_back(r.profile.mean_score);
        ranks_logd.push_back(r.profile.mean_log_density);
      } else {
        ranks_lof.push_back(r.profile.mean_score);
      }
    }
    classes.push_back({
        {"label", c.label},
        {"count", c.count},
        {"finished", c.finished},
        {"spearman_asd_logdensity", opt(c.spearman_asd_logdensity)},
        {"partial_full_spearman", opt(c.partial_full_spearman)},
        {"top_keep_overlap", opt(c.top_keep_overlap)},
        {"gamma", opt(c.gamma)},
        {"accepted", c.accepted},
        {"nfe_saved_fraction", c.nfe_saved_fraction},
        {"predicted_nfe_saved_fraction", c.predicted_nfe_saved_fraction},
        {"rank_mean_avg_knn", ranks_knn},
        {"rank_mean_lof", ranks_lof},
        {"rank_mean_log_density", ranks_logd},
    });
  }
  json budgets = json::array();
  for (const auto& [label, cmp] : s.budgets) {
    budgets.push_back({{"class", label},
                       {"cfg_rejection", report_json(cmp.cfg_rejection)},
                       {"best_of_n", report_json(cmp.best_of_n)}});
  }
  return {
      {"omega", s.omega},
      {"num_records", s.num_records},
      {"num_finished", s.num_finished},
      {"spearman_asd_logdensity", opt(s.spearman_asd_logdensity)},
      {"pearson_asd_logdensity", opt(s.pearson_asd_logdensity)},
      {"fit_slope", s.curve ? json(s.curve->fit_slope) : json(nullptr)},
      {"fit_intercept", s.curve ? json(s.curve->fit_intercept) : json(nullptr)},
      {"fit_r2", s.curve ? json(s.curve->fit_r2) : json(nullptr)},
      {"fit_nonempty_bins", s.curve ? json(s.curve->nonempty_bins()) : json(nullptr)},
      {"fit_log_axis", curve_json(s.curve_log)},
      {"fit_r2_log_axis", s.curve_log ? json(s.curve_log->fit_r2) : json(nullptr)},
      {"partial_full_spearman", opt(s.partial_full_spearman)},
      {"top_keep_overlap", opt(s.top_keep_overlap)},
      {"nfe_saved_fraction", s.nfe_saved_fraction},
      {"predicted_nfe_saved_fraction", s.predicted_nfe_saved_fraction},
      {"classes", classes},
      {"budget", budgets},
  };
}

std::string omega_dir_name(double omega) { return "omega_" + format_double(omega); }

std::string scatter_svg_for(std::span<const SampleRecord> records, const std::string& title) {
  std::vector<Vec2> pts;
  std::vector<double> values;
  for (const auto& r : records) {
    if (!r.finished()) continue;
    pts.push_back(*r.position);
    values.push_back(r.asd_full.value_or(0.0));
  }
  return scatter_svg(pts, values, title);
}

std::string curve_svg_for(const BinnedCurve& curve, const std::string& title) {
  std::vector<double> xs, ys;
  for (std::size_t b = 0; b < curve.bin_counts.size(); ++b) {
    if (curve.bin_counts[b] == 0) continue;
    xs.push_back(curve.bin_mean_x[b]);
    ys.push_back(curve.bin_mean_y[b]);
  }
  return curve_svg(xs, ys, FitLine{curve.fit_slope, curve.fit_intercept}, title,
                   curve.axis == AsdAxis::log ? "log ASD (bin mean)" : "ASD (bin mean)",
                   "log density (bin mean)");
}

void write_omega_artifacts(const std::filesystem::path& dir,
                           std::span<const SampleRecord> records, const OmegaSummary& s) {
  const std::string tag = "omega = " + format_double(s.omega);
  write_text_file(dir / "samples.csv", samples_to_csv(records));
  write_text_file(dir / "curve.csv",
                  s.curve ? curve_to_csv(*s.curve)
                          : std::string("bin,asd_lo,asd_hi,count,mean_asd,mean_log_density\n"));
  write_text_file(dir / "ranks.csv", ranks_to_csv(s.ranks));
  write_text_file(dir / "budget.csv", budget_to_csv(s.budgets));
  write_text_file(dir / "summary.json", summary_to_json(s).dump(2) + "\n");
  write_text_file(dir / "scatter.svg", scatter_svg_for(records, "Samples colored by ASD, " + tag));
  write_text_file(dir / "curve.svg",
                  s.curve ? curve_svg_for(*s.curve, "Binned ASD vs log density, " + tag)
                          : curve_svg({}, {}, std::nullopt, "Binned ASD vs log density, " + tag,
                                      "ASD (bin mean)", "log density (bin mean)"));
}

json reproducible_config_json(const ExperimentConfig& config) {
  json doc = config_to_json(config);
  doc.erase("threads");
  doc.erase("output_dir");
  return doc;
}

void run_experiment(const ExperimentConfig& config) {
  config.validate();
  const MixtureDistribution dist = resolve_distribution(config);
  const std::filesystem::path root = config.output_dir;
  json overview = {{"config", reproducible_config_json(config)}, {"runs", json::array()}};
  for (double omega : config.guidance_list) {
    SampleRun run = sample_all(dist, config, omega);
    score_records(dist, run.records, config.density.k, config.threads);
    OmegaSummary summary = summarize(config, omega, run.records);
    add_budget_comparisons(summary, dist, config);
    const std::string name = omega_dir_name(omega);
    write_omega_artifacts(root / name, run.records, summary);
    overview["runs"].push_back({
        {"omega", omega},
        {"directory", name},
        {"spearman_asd_logdensity", opt(summary.spearman_asd_logdensity)},
        {"fit_slope", summary.curve ? json(summary.curve->fit_slope) : json(nullptr)},
        {"fit_r2", summary.curve ? json(summary.curve->fit_r2) : json(nullptr)},
        {"nfe_saved_fraction", summary.nfe_saved_fraction},
    });
  }
  write_text_file(root / "summary.json", overview.dump(2) + "\n");
}

}  // namespace cfgreject
