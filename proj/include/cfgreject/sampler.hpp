#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cfgreject/asd.hpp"
#include "cfgreject/distribution.hpp"

namespace cfgreject {

/// sigma_max = sigmas[0] > ... > sigmas[T-1] = sigma_min > sigmas[T] = 0.
struct NoiseSchedule {
  std::vector<double> sigmas;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double rho = 1.0;

  std::size_t steps() const { return sigmas.empty() ? 0 : sigmas.size() - 1; }
  friend bool operator==(const NoiseSchedule&, const NoiseSchedule&) = default;
};

/// Power-interpolated schedule with T steps, ending in an exact 0.
NoiseSchedule make_schedule(std::size_t steps, double sigma_min, double sigma_max, double rho);

struct GuidanceConfig {
  double omega = 2.0;
  ScoreScaling scaling = ScoreScaling::sigma_scaled;

  friend bool operator==(const GuidanceConfig&, const GuidanceConfig&) = default;
};

enum class Solver { euler, heun };

/// omega * s(x | c) + (1 - omega) * s(x).
Vec2 cfg_score(const MixtureDistribution& dist, Vec2 x, double sigma, ClassLabel label,
               const GuidanceConfig& cfg);
Vec2 combine_guidance(const ScorePair& scores, double omega);

/// One explicit step of dx = -sigma * score * dsigma from sigma_from to sigma_to.
Vec2 ode_step_euler(const MixtureDistribution& dist, Vec2 x, double sigma_from, double sigma_to,
                    ClassLabel label, const GuidanceConfig& cfg);

/// Heun step; degrades to Euler when sigma_to == 0.
Vec2 ode_step_heun(const MixtureDistribution& dist, Vec2 x, double sigma_from, double sigma_to,
                   ClassLabel label, const GuidanceConfig& cfg);

/// Score-function evaluations per step (each conditional or unconditional
/// score counts once).
std::size_t step_nfe(Solver solver, double sigma_to);
/// Cost of the first `steps` steps of `schedule`.
std::size_t prefix_nfe(const NoiseSchedule& schedule, Solver solver, std::size_t steps);
inline std::size_t full_nfe(const NoiseSchedule& schedule, Solver solver) {
  return prefix_nfe(schedule, solver, schedule.steps());
}

struct Trajectory {
  ClassLabel label = 0;
  std::uint64_t seed = 0;
  std::vector<Vec2> states;  // x_T first; one more per completed step
  AsdLedger ledger;
  std::size_t steps_completed = 0;
  std::size_t nfe = 0;
  bool terminated_early = false;

  const Vec2& current() const { return states.back(); }
  bool finished() const { return steps_completed == ledger.total_steps(); }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Called after every step; returning true stops the trajectory there.
using StopRule = std::function<bool(const Trajectory&)>;

/// One sampling job of a batch.
struct Candidate {
  ClassLabel label = 0;
  std::uint64_t seed = 0;
};

/// Candidates 0..count-1 with seeds derive_seed(master_seed, index).
std::vector<Candidate> make_candidates(ClassLabel label, std::size_t count,
                                       std::uint64_t master_seed);

/// Reverse-ODE integrator bound to one distribution, schedule, guidance and
/// solver. Noisy mixtures for every schedule level are built once up front.
class Sampler {
 public:
  Sampler(const MixtureDistribution& dist, NoiseSchedule schedule, GuidanceConfig cfg,
          Solver solver);

  const MixtureDistribution& distribution() const { return *dist_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  const GuidanceConfig& guidance() const { return cfg_; }
  Solver solver() const { return solver_; }
  std::size_t steps() const { return schedule_.steps(); }

  /// x_T ~ N(0, sigma_max^2 I) drawn from `seed`; no steps taken.
  Trajectory begin(ClassLabel label, std::uint64_t seed) const;

  /// Runs up to `max_steps` further steps, stopping early when stop_rule
  /// fires. terminated_early is set only when the rule fires before the
  /// final step.
  void advance(Trajectory& traj, std::size_t max_steps, const StopRule& stop_rule = {}) const;

  Trajectory sample(ClassLabel label, std::uint64_t seed, const StopRule& stop_rule = {}) const;

  /// Samples every candidate; output i belongs to candidates[i] regardless of
  /// thread count.
  std::vector<Trajectory> sample_batch(std::span<const Candidate> candidates,
                                       std::size_t threads = 0,
                                       const StopRule& stop_rule = {}) const;

 private:
  void step(Trajectory& traj) const;

  const MixtureDistribution* dist_;
  NoiseSchedule schedule_;
  GuidanceConfig cfg_;
  Solver solver_;
  std::vector<NoisyMixture> levels_;  // one per sigma > 0
};

/// Free-function form of Sampler::sample.
Trajectory sample_trajectory(const MixtureDistribution& dist, ClassLabel label,
                             const NoiseSchedule& schedule, const GuidanceConfig& cfg,
                             Solver solver, std::uint64_t seed, const StopRule& stop_rule = {});

}  // namespace cfgreject
