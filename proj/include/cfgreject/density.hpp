#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cfgreject/distribution.hpp"

namespace cfgreject {

/// Ground-truth and model-free density indicators for one sample. Higher
/// avg_knn and lof mean lower manifold likelihood.
struct DensityScores {
  double true_log_density = 0.0;
  double avg_knn = 0.0;
  double lof = 1.0;
};

/// Mean Euclidean distance from each query to its k nearest reference points.
/// Query and reference sets are treated as distinct.
std::vector<double> avg_knn_scores(std::span<const Vec2> queries, std::span<const Vec2> reference,
                                   std::size_t k, std::size_t threads = 0);

/// Same, scoring every point against the rest of the set (self excluded).
std::vector<double> avg_knn_scores(std::span<const Vec2> points, std::size_t k,
                                   std::size_t threads = 0);

/// Local Outlier Factor (Breunig et al.). The k-neighborhood includes every
/// point tied at the k-distance; mean reachability is floored at 1e-12 so
/// duplicate points stay finite.
std::vector<double> lof_scores(std::span<const Vec2> points, std::size_t k,
                               std::size_t threads = 0);

/// log p(x; sigma | cond) for each point.
std::vector<double> true_log_density_batch(const MixtureDistribution& dist,
                                           std::span<const Vec2> points,
                                           std::optional<ClassLabel> cond, double sigma = 0.0);

}  // namespace cfgreject
