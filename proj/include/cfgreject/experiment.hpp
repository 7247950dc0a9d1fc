#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cfgreject/analysis.hpp"
#include "cfgreject/config.hpp"
#include "cfgreject/records.hpp"

namespace cfgreject {

/// Mixture from config.distribution_file when set, otherwise the fractal.
MixtureDistribution resolve_distribution(const ExperimentConfig& config);

NoiseSchedule make_schedule(const ScheduleConfig& schedule);

/// num_samples candidates per class. Class j's seeds come from the stream
/// derive_seed(master_seed, j), so they do not depend on the guidance weight.
std::vector<Candidate> experiment_candidates(const MixtureDistribution& dist,
                                             const ExperimentConfig& config);

struct SampleRun {
  std::vector<Trajectory> trajectories;
  std::vector<SampleRecord> records;
};

/// Fully denoises every experiment candidate at guidance `omega`.
SampleRun sample_all(const MixtureDistribution& dist, const ExperimentConfig& config,
                     double omega);

struct ClassSummary {
  ClassLabel label = 0;
  std::size_t count = 0;     // records of this class
  std::size_t finished = 0;  // records with a final sample
  std::optional<double> spearman_asd_logdensity;
  std::optional<double> partial_full_spearman;
  std::optional<double> top_keep_overlap;
  std::optional<double> gamma;
  std::size_t accepted = 0;
  double nfe_saved_fraction = 0.0;
  double predicted_nfe_saved_fraction = 0.0;
};

struct OmegaSummary {
  double omega = 0.0;
  std::size_t num_records = 0;
  std::size_t num_finished = 0;
  std::optional<double> spearman_asd_logdensity;
  std::optional<double> pearson_asd_logdensity;
  std::optional<BinnedCurve> curve;      // linear ASD axis
  std::optional<BinnedCurve> curve_log;  // log ASD axis
  std::optional<double> partial_full_spearman;
  std::optional<double> top_keep_overlap;
  double nfe_saved_fraction = 0.0;
  double predicted_nfe_saved_fraction = 0.0;
  std::vector<ClassSummary> classes;
  std::vector<RankRow> ranks;
  std::vector<std::pair<ClassLabel, BudgetComparison>> budgets;
};

/// Correlations, binned curves, rank profiles and filter statistics over
/// scored records (see score_records). Degenerate quantities stay empty
/// rather than throwing: correlations need three finite pairs with nonzero
/// variance and curves need two populated bins.
///
/// NFE figures assume every record with asd_partial < gamma of its class
/// would have stopped after tau + 1 steps.
OmegaSummary summarize(const ExperimentConfig& config, double omega,
                       std::span<const SampleRecord> records);

/// Runs budget_comparison for every class with budget
/// max(full, floor(budget_fraction * num_samples * full)).
void add_budget_comparisons(OmegaSummary& summary, const MixtureDistribution& dist,
                            const ExperimentConfig& config);

nlohmann::json summary_to_json(const OmegaSummary& summary);

/// "omega_" followed by the shortest decimal form of omega.
std::string omega_dir_name(double omega);

/// samples.csv, curve.csv, ranks.csv, budget.csv, summary.json, scatter.svg
/// and curve.svg inside `dir`.
void write_omega_artifacts(const std::filesystem::path& dir,
                           std::span<const SampleRecord> records, const OmegaSummary& summary);

std::string scatter_svg_for(std::span<const SampleRecord> records, const std::string& title);
std::string curve_svg_for(const BinnedCurve& curve, const std::string& title);

/// Whole pipeline for every guidance value; writes one directory per omega
/// plus a top-level summary.json. Deterministic given master_seed.
void run_experiment(const ExperimentConfig& config);

/// Config echo written into outputs: everything except the fields that may
/// legitimately differ between otherwise identical runs (threads, output_dir).
nlohmann::json reproducible_config_json(const ExperimentConfig& config);

}  // namespace cfgreject
