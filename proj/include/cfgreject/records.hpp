#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfgreject/analysis.hpp"
#include "cfgreject/io.hpp"
#include "cfgreject/sampler.hpp"

namespace cfgreject {

/// One row of samples.csv. Optional fields are written as empty cells; a
/// trajectory that stopped early has no final position, density or full ASD.
struct SampleRecord {
  std::size_t index = 0;
  ClassLabel label = 0;
  std::uint64_t seed = 0;
  std::optional<double> asd_full;
  std::optional<double> asd_partial;
  bool terminated_early = false;
  std::optional<Vec2> position;
  std::optional<double> true_log_density;
  std::optional<double> avg_knn;
  std::optional<double> lof;
  std::size_t steps_completed = 0;
  std::size_t nfe = 0;

  bool finished() const { return position.has_value(); }
  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

inline constexpr const char* kSamplesHeader =
    "index,class,seed,asd_full,asd_partial,terminated_early,x0,x1,true_log_density,avg_knn,lof,"
    "steps_completed,nfe";

/// Records for `trajectories`, numbered from first_index. asd_partial is
/// filled when at least tau + 1 steps were recorded.
std::vector<SampleRecord> make_records(std::span<const Trajectory> trajectories, std::size_t tau,
                                       std::size_t first_index = 0);

/// Fills true conditional log-density, AvgkNN and LOF for every finished
/// record. The estimators score each class against its own finished samples
/// and are left empty when a class has k or fewer of them.
void score_records(const MixtureDistribution& dist, std::vector<SampleRecord>& records,
                   std::size_t k, std::size_t threads = 0);

std::string samples_to_csv(std::span<const SampleRecord> records);
/// Inverse of samples_to_csv; throws IoError on schema or value errors.
std::vector<SampleRecord> samples_from_csv(const CsvTable& table);

/// Long-format G_t table: index, class, step, sigma, g.
std::string ledgers_to_csv(std::span<const SampleRecord> records,
                           std::span<const Trajectory> trajectories,
                           const NoiseSchedule& schedule);

std::string curve_to_csv(const BinnedCurve& curve);

struct RankRow {
  ClassLabel label = 0;
  DensityEstimator estimator = DensityEstimator::avg_knn;
  RankProfile profile;
  double asd_min = 0.0;
  double asd_max = 0.0;
};

std::string ranks_to_csv(std::span<const RankRow> rows);
std::string budget_to_csv(std::span<const std::pair<ClassLabel, BudgetComparison>> budgets);

std::string to_string(DensityEstimator estimator);

}  // namespace cfgreject
