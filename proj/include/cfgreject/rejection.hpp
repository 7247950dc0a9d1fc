#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cfgreject/asd.hpp"
#include "cfgreject/sampler.hpp"

namespace cfgreject {

enum class FilterMode {
  two_pass,   // run every candidate to step T - tau, threshold the batch, resume the kept ones
  streaming,  // threshold known in advance; each candidate stops itself at step T - tau
};

struct NfeReport {
  std::size_t total_nfe = 0;       // evaluations actually spent
  std::size_t full_batch_nfe = 0;  // cost of denoising every candidate fully
  double saved_fraction = 0.0;     // 1 - total / full_batch
  /// rejected * (full - prefix) / (N * full) under the solver cost model.
  double predicted_saved_fraction = 0.0;
};

struct FilterResult {
  std::vector<std::size_t> accepted;
  std::vector<std::size_t> rejected;
  double gamma = 0.0;
  std::vector<double> partial_asds;
  std::vector<Trajectory> trajectories;  // rejected ones stop after tau + 1 steps
  NfeReport nfe;
};

/// Candidates with partial ASD >= gamma are denoised to completion; the rest
/// are abandoned after tau + 1 steps. two_pass resolves gamma from the batch
/// itself; streaming requires `gamma`. Requires tau + 1 <= T.
FilterResult filter_batch(const Sampler& sampler, std::span<const Candidate> candidates,
                          const RejectionPolicy& policy, FilterMode mode,
                          std::optional<double> gamma = std::nullopt, std::size_t threads = 0);

/// Runs the first tau + 1 steps of every candidate and resolves gamma, for
/// later use in streaming mode.
double calibrate_threshold(const Sampler& sampler, std::span<const Candidate> candidates,
                           const RejectionPolicy& policy, std::size_t threads = 0);

/// Savings predicted in closed form when `rejected` of `total` candidates stop
/// after tau + 1 steps.
double predicted_savings(const Sampler& sampler, std::size_t tau, std::size_t rejected,
                         std::size_t total);

}  // namespace cfgreject
