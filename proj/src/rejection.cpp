#include "cfgreject/rejection.hpp"

#include <stdexcept>
#include <string>

#include "cfgreject/parallel.hpp"

namespace cfgreject {

namespace {

std::size_t checked_prefix(const Sampler& sampler, const RejectionPolicy& policy) {
  policy.validate(sampler.steps());
  if (policy.tau + 1 > sampler.steps()) {
    throw std::invalid_argument("policy.tau: early rejection needs tau + 1 <= T (tau=" +
                                std::to_string(policy.tau) +
                                ", T=" + std::to_string(sampler.steps()) + ")");
  }
  return policy.tau + 1;
}

std::vector<Trajectory> run_prefixes(const Sampler& sampler, std::span<const Candidate> candidates,
                                     std::size_t prefix, std::size_t threads) {
  std::vector<Trajectory> out(candidates.size());
  parallel_for(candidates.size(), threads, [&](std::size_t i) {
    out[i] = sampler.begin(candidates[i].label, candidates[i].seed);
    sampler.advance(out[i], prefix);
  });
  return out;
}

}  // namespace

double predicted_savings(const Sampler& sampler, std::size_t tau, std::size_t rejected,
                         std::size_t total) {
  if (total == 0) return 0.0;
  const double full = static_cast<double>(full_nfe(sampler.schedule(), sampler.solver()));
  const double prefix =
      static_cast<double>(prefix_nfe(sampler.schedule(), sampler.solver(), tau + 1));
  return static_cast<double>(rejected) * (full - prefix) / (static_cast<double>(total) * full);
}

double calibrate_threshold(const Sampler& sampler, std::span<const Candidate> candidates,
                           const RejectionPolicy& policy, std::size_t threads) {
  const std::size_t prefix = checked_prefix(sampler, policy);
  const auto trajectories = run_prefixes(sampler, candidates, prefix, threads);
  std::vector<double> partial;
  partial.reserve(trajectories.size());
  for (const auto& t : trajectories) partial.push_back(partial_asd(t.ledger, policy.tau));
  return resolve_threshold(partial, policy.keep_percentile);
}

FilterResult filter_batch(const Sampler& sampler, std::span<const Candidate> candidates,
                          const RejectionPolicy& policy, FilterMode mode,
                          std::optional<double> gamma, std::size_t threads) {
  const std::size_t prefix = checked_prefix(sampler, policy);
  if (candidates.empty()) throw std::invalid_argument("filter_batch needs at least one candidate");

  FilterResult result;
  if (mode == FilterMode::two_pass) {
    result.trajectories = run_prefixes(sampler, candidates, prefix, threads);
    for (const auto& t : result.trajectories) {
      result.partial_asds.push_back(partial_asd(t.ledger, policy.tau));
    }
    result.gamma = resolve_threshold(result.partial_asds, policy.keep_percentile);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      (result.partial_asds[i] >= result.gamma ? result.accepted : result.rejected).push_back(i);
    }
    // Barrier passed: only the kept trajectories resume.
    parallel_for(result.accepted.size(), threads, [&](std::size_t j) {
      auto& traj = result.trajectories[result.accepted[j]];
      sampler.advance(traj, sampler.steps());
    });
    for (std::size_t i : result.rejected) {
      result.trajectories[i].terminated_early = !result.trajectories[i].finished();
    }
  } else {
    if (!gamma) throw std::invalid_argument("streaming mode needs a calibrated threshold");
    result.gamma = *gamma;
    const double threshold = *gamma;
    const std::size_t tau = policy.tau;
    const StopRule stop = [prefix, tau, threshold](const Trajectory& t) {
      return t.steps_completed == prefix && partial_asd(t.ledger, tau) < threshold;
    };
    result.trajectories = sampler.sample_batch(candidates, threads, stop);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const double p = partial_asd(result.trajectories[i].ledger, tau);
      result.partial_asds.push_back(p);
      (p >= threshold ? result.accepted : result.rejected).push_back(i);
    }
  }

  const std::size_t full = full_nfe(sampler.schedule(), sampler.solver());
  for (const auto& t : result.trajectories) result.nfe.total_nfe += t.nfe;
  result.nfe.full_batch_nfe = full * candidates.size();
  result.nfe.saved_fraction = 1.0 - static_cast<double>(result.nfe.total_nfe) /
                                        static_cast<double>(result.nfe.full_batch_nfe);
  result.nfe.predicted_saved_fraction =
      predicted_savings(sampler, policy.tau, result.rejected.size(), candidates.size());
  return result;
}

}  // namespace cfgreject
