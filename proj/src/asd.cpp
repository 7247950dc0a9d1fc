#include "cfgreject/asd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cfgreject {

void AsdLedger::record(double g) {
  if (!(g >= 0.0) || !std::isfinite(g)) {
    throw std::invalid_argument("score difference must be finite and >= 0");
  }
  if (complete()) throw std::logic_error("ledger already holds every step");
  g_values_.push_back(g);
  running_sum_sq_ += g * g;
}

double score_difference(const Vec2& conditional, const Vec2& unconditional, double sigma,
                        ScoreScaling scaling) {
  if (!(sigma > 0.0)) throw std::invalid_argument("score difference needs sigma > 0");
  const double raw = norm(conditional - unconditional);
  return scaling == ScoreScaling::sigma_scaled ? sigma * raw : raw;
}

double score_difference(const MixtureDistribution& dist, Vec2 x, double sigma, ClassLabel label,
                        ScoreScaling scaling) {
  if (!(sigma > 0.0)) throw std::invalid_argument("score difference needs sigma > 0");
  const NoisyMixture noisy(dist, sigma);
  const ScorePair p = noisy.pair(x, dist.class_index(label));
  return score_difference(p.conditional.score, p.unconditional.score, sigma, scaling);
}

double full_asd(const AsdLedger& ledger) {
  if (!ledger.complete()) {
    throw std::logic_error("full ASD is undefined for an incomplete trajectory (" +
                           std::to_string(ledger.size()) + " of " +
                           std::to_string(ledger.total_steps()) + " steps)");
  }
  double total = 0.0;
  for (double g : ledger.g_values()) total += g * g;
  return total;
}

double partial_asd(const AsdLedger& ledger, std::size_t tau) {
  if (ledger.size() < tau + 1) {
    throw std::invalid_argument("partial ASD with tau=" + std::to_string(tau) + " needs " +
                                std::to_string(tau + 1) + " recorded steps, have " +
                                std::to_string(ledger.size()));
  }
  double total = 0.0;
  for (double g : ledger.g_values().first(tau + 1)) total += g * g;
  return total;
}

std::size_t keep_count(std::size_t n, double keep_percentile) {
  if (!(keep_percentile > 0.0 && keep_percentile <= 1.0)) {
    throw std::invalid_argument("keep_percentile must lie in (0, 1]");
  }
  // The slack absorbs representation error such as 0.1 * 30 = 3.0000000000000004.
  const double raw = keep_percentile * static_cast<double>(n);
  const auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  return std::clamp<std::size_t>(k, n == 0 ? 0 : 1, n);
}

double resolve_threshold(std::span<const double> partial_asds, double keep_percentile) {
  if (partial_asds.empty()) throw std::invalid_argument("cannot threshold an empty batch");
  const std::size_t k = keep_count(partial_asds.size(), keep_percentile);
  std::vector<double> sorted(partial_asds.begin(), partial_asds.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted[sorted.size() - k];
}

void RejectionPolicy::validate(std::size_t total_steps) const {
  if (tau < 1 || tau > total_steps) {
    throw std::invalid_argument("policy.tau: must lie in [1, " + std::to_string(total_steps) +
                                "], got " + std::to_string(tau));
  }
  if (!(keep_percentile > 0.0 && keep_percentile <= 1.0)) {
    throw std::invalid_argument("policy.keep: must lie in (0, 1]");
  }
}

}  // namespace cfgreject
