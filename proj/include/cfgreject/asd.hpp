#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cfgreject/distribution.hpp"

namespace cfgreject {

/// How raw score differences are turned into G_t.
enum class ScoreScaling {
  raw_score,     // G_t = |s_c - s_u|
  sigma_scaled,  // G_t = sigma_t |s_c - s_u|
};

/// Per-trajectory record of score differences, in execution order: entry 0
/// belongs to the first (noisiest) step t = T.
class AsdLedger {
 public:
  AsdLedger() = default;
  explicit AsdLedger(std::size_t total_steps) : total_steps_(total_steps) {
    g_values_.reserve(total_steps);
  }

  /// Throws std::invalid_argument for negative or non-finite g, and
  /// std::logic_error once all total_steps entries are recorded.
  void record(double g);

  std::span<const double> g_values() const { return g_values_; }
  double running_sum_sq() const { return running_sum_sq_; }
  std::size_t size() const { return g_values_.size(); }
  std::size_t total_steps() const { return total_steps_; }
  bool complete() const { return g_values_.size() == total_steps_; }

  friend bool operator==(const AsdLedger&, const AsdLedger&) = default;

 private:
  std::size_t total_steps_ = 0;
  std::vector<double> g_values_;
  double running_sum_sq_ = 0.0;
};

/// G from an already evaluated conditional/unconditional score pair.
double score_difference(const Vec2& conditional, const Vec2& unconditional, double sigma,
                        ScoreScaling scaling);

/// G_t at (x, sigma). Rejects sigma <= 0.
double score_difference(const MixtureDistribution& dist, Vec2 x, double sigma, ClassLabel label,
                        ScoreScaling scaling = ScoreScaling::sigma_scaled);

/// E_T: sum of G_t^2 over a complete ledger. Throws std::logic_error when the
/// trajectory stopped early.
double full_asd(const AsdLedger& ledger);

/// E_{tau:T}: sum of G_t^2 over steps t = T .. T - tau, i.e. the first tau + 1
/// recorded entries. Throws std::invalid_argument when fewer are recorded.
double partial_asd(const AsdLedger& ledger, std::size_t tau);

/// Trajectories needed to keep out of n: ceil(keep_percentile * n).
std::size_t keep_count(std::size_t n, double keep_percentile);

/// Nearest-rank threshold gamma such that, without ties, exactly
/// keep_count(n, keep_percentile) values satisfy value >= gamma.
double resolve_threshold(std::span<const double> partial_asds, double keep_percentile);

struct RejectionPolicy {
  std::size_t tau = 10;
  double keep_percentile = 0.1;

  /// Checks 1 <= tau <= total_steps and 0 < keep_percentile <= 1.
  void validate(std::size_t total_steps) const;
};

}  // namespace cfgreject
