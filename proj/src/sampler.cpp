#include "cfgreject/sampler.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "cfgreject/parallel.hpp"

namespace cfgreject {

NoiseSchedule make_schedule(std::size_t steps, double sigma_min, double sigma_max, double rho) {
  if (steps < 1) throw std::invalid_argument("schedule.steps: must be >= 1");
  if (!(sigma_min > 0.0)) throw std::invalid_argument("schedule.sigma_min: must be > 0");
  if (!(sigma_max > sigma_min) || !std::isfinite(sigma_max)) {
    throw std::invalid_argument("schedule.sigma_max: must be finite and > sigma_min");
  }
  if (!(rho >= 1.0) || !std::isfinite(rho)) throw std::invalid_argument("schedule.rho: must be >= 1");

  NoiseSchedule s{{}, sigma_min, sigma_max, rho};
  s.sigmas.reserve(steps + 1);
  const double hi = std::pow(sigma_max, 1.0 / rho);
  const double lo = std::pow(sigma_min, 1.0 / rho);
  for (std::size_t i = 0; i < steps; ++i) {
    if (i == 0) {
      s.sigmas.push_back(sigma_max);
    } else if (i + 1 == steps) {
      s.sigmas.push_back(sigma_min);
    } else {
      const double frac = static_cast<double>(i) / static_cast<double>(steps - 1);
      s.sigmas.push_back(std::pow(hi + frac * (lo - hi), rho));
    }
  }
  s.sigmas.push_back(0.0);
  for (std::size_t i = 0; i + 1 < s.sigmas.size(); ++i) {
    if (!(s.sigmas[i] > s.sigmas[i + 1])) {
      throw std::invalid_argument("schedule is not strictly decreasing; reduce steps or widen "
                                  "[sigma_min, sigma_max]");
    }
  }
  return s;
}

Vec2 combine_guidance(const ScorePair& scores, double omega) {
  return scores.conditional.score * omega + scores.unconditional.score * (1.0 - omega);
}

Vec2 cfg_score(const MixtureDistribution& dist, Vec2 x, double sigma, ClassLabel label,
               const GuidanceConfig& cfg) {
  const NoisyMixture noisy(dist, sigma);
  return combine_guidance(noisy.pair(x, dist.class_index(label)), cfg.omega);
}

namespace {

void check_step(double sigma_from, double sigma_to) {
  if (!(sigma_to >= 0.0) || !(sigma_from >= sigma_to)) {
    throw std::invalid_argument("ODE step needs sigma_from >= sigma_to >= 0");
  }
}

// dx/dsigma = -sigma * score.
Vec2 drift(const MixtureDistribution& dist, Vec2 x, double sigma, ClassLabel label,
           const GuidanceConfig& cfg) {
  return cfg_score(dist, x, sigma, label, cfg) * -sigma;
}

}  // namespace

Vec2 ode_step_euler(const MixtureDistribution& dist, Vec2 x, double sigma_from, double sigma_to,
                    ClassLabel label, const GuidanceConfig& cfg) {
  check_step(sigma_from, sigma_to);
  if (sigma_from == sigma_to) return x;
  return x + drift(dist, x, sigma_from, label, cfg) * (sigma_to - sigma_from);
}

Vec2 ode_step_heun(const MixtureDistribution& dist, Vec2 x, double sigma_from, double sigma_to,
                   ClassLabel label, const GuidanceConfig& cfg) {
  check_step(sigma_from, sigma_to);
  if (sigma_from == sigma_to) return x;
  const double h = sigma_to - sigma_from;
  const Vec2 d1 = drift(dist, x, sigma_from, label, cfg);
  const Vec2 predicted = x + d1 * h;
  if (sigma_to == 0.0) return predicted;
  const Vec2 d2 = drift(dist, predicted, sigma_to, label, cfg);
  return x + (d1 + d2) * (0.5 * h);
}

std::size_t step_nfe(Solver solver, double sigma_to) {
  return solver == Solver::heun && sigma_to > 0.0 ? 4 : 2;
}

std::size_t prefix_nfe(const NoiseSchedule& schedule, Solver solver, std::size_t steps) {
  if (steps > schedule.steps()) throw std::invalid_argument("prefix longer than schedule");
  std::size_t total = 0;
  for (std::size_t k = 0; k < steps; ++k) total += step_nfe(solver, schedule.sigmas[k + 1]);
  return total;
}

std::vector<Candidate> make_candidates(ClassLabel label, std::size_t count,
                                       std::uint64_t master_seed) {
  std::vector<Candidate> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = {label, derive_seed(master_seed, i)};
  return out;
}

Sampler::Sampler(const MixtureDistribution& dist, NoiseSchedule schedule, GuidanceConfig cfg,
                 Solver solver)
    : dist_(&dist), schedule_(std::move(schedule)), cfg_(cfg), solver_(solver) {
  if (schedule_.steps() < 1 || schedule_.sigmas.back() != 0.0) {
    throw std::invalid_argument("sampler needs a schedule ending at sigma = 0");
  }
  if (!(cfg_.omega >= 0.0) || !std::isfinite(cfg_.omega)) {
    throw std::invalid_argument("guidance omega must be finite and >= 0");
  }
  levels_.reserve(schedule_.steps());
  for (std::size_t k = 0; k < schedule_.steps(); ++k) levels_.emplace_back(dist, schedule_.sigmas[k]);
}

Trajectory Sampler::begin(ClassLabel label, std::uint64_t seed) const {
  dist_->class_index(label);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double x = normal(rng);
  const double y = normal(rng);
  Trajectory traj;
  traj.label = label;
  traj.seed = seed;
  traj.ledger = AsdLedger(steps());
  traj.states.reserve(steps() + 1);
  traj.states.push_back(Vec2{x, y} * schedule_.sigma_max);
  return traj;
}

void Sampler::step(Trajectory& traj) const {
  const std::size_t k = traj.steps_completed;
  const std::size_t ci = dist_->class_index(traj.label);
  const double sigma_from = schedule_.sigmas[k];
  const double sigma_to = schedule_.sigmas[k + 1];
  const double h = sigma_to - sigma_from;
  const Vec2 x = traj.current();

  const ScorePair first = levels_[k].pair(x, ci);
  traj.ledger.record(
      score_difference(first.conditional.score, first.unconditional.score, sigma_from, cfg_.scaling));
  const Vec2 d1 = combine_guidance(first, cfg_.omega) * -sigma_from;
  Vec2 next = x + d1 * h;
  if (solver_ == Solver::heun && sigma_to > 0.0) {
    const ScorePair second = levels_[k + 1].pair(next, ci);
    const Vec2 d2 = combine_guidance(second, cfg_.omega) * -sigma_to;
    next = x + (d1 + d2) * (0.5 * h);
  }
  traj.nfe += step_nfe(solver_, sigma_to);
  traj.states.push_back(next);
  ++traj.steps_completed;
}

void Sampler::advance(Trajectory& traj, std::size_t max_steps, const StopRule& stop_rule) const {
  if (traj.ledger.total_steps() != steps()) {
    throw std::invalid_argument("trajectory was started for a different schedule");
  }
  for (std::size_t n = 0; n < max_steps && !traj.finished(); ++n) {
    step(traj);
    if (stop_rule && stop_rule(traj)) {
      traj.terminated_early = !traj.finished();
      return;
    }
  }
}

Trajectory Sampler::sample(ClassLabel label, std::uint64_t seed, const StopRule& stop_rule) const {
  Trajectory traj = begin(label, seed);
  advance(traj, steps(), stop_rule);
  return traj;
}

std::vector<Trajectory> Sampler::sample_batch(std::span<const Candidate> candidates,
                                              std::size_t threads,
                                              const StopRule& stop_rule) const {
  std::vector<Trajectory> out(candidates.size());
  parallel_for(candidates.size(), threads, [&](std::size_t i) {
    out[i] = sample(candidates[i].label, candidates[i].seed, stop_rule);
  });
  return out;
}

Trajectory sample_trajectory(const MixtureDistribution& dist, ClassLabel label,
                             const NoiseSchedule& schedule, const GuidanceConfig& cfg,
                             Solver solver, std::uint64_t seed, const StopRule& stop_rule) {
  return Sampler(dist, schedule, cfg, solver).sample(label, seed, stop_rule);
}

}  // namespace cfgreject
