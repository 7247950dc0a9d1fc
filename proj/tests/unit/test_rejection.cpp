#include <gtest/gtest.h>

#include <algorithm>

#include "cfgreject/rejection.hpp"

using namespace cfgreject;

namespace {

struct Fixture {
  MixtureDistribution dist = build_fractal_mixture(FractalConfig{}, 2);
  Sampler make(std::size_t steps) const {
    return Sampler(dist, make_schedule(steps, 0.002, 80.0, 7.0), {2.0}, Solver::heun);
  }
};

}  // namespace

TEST(Filter, KeepEverything) {
  const Fixture f;
  const auto sampler = f.make(12);
  const auto cands = make_candidates(0, 16, 1);
  const auto r = filter_batch(sampler, cands, {4, 1.0}, FilterMode::two_pass, {}, 2);
  EXPECT_EQ(r.accepted.size(), 16u);
  EXPECT_TRUE(r.rejected.empty());
  EXPECT_EQ(r.nfe.saved_fraction, 0.0);
  EXPECT_EQ(r.nfe.predicted_saved_fraction, 0.0);
  for (const auto& t : r.trajectories) EXPECT_TRUE(t.finished());
}

TEST(Filter, KeepsTheTopPartialScores) {
  const Fixture f;
  const auto sampler = f.make(50);
  const auto cands = make_candidates(1, 20, 2);
  const RejectionPolicy policy{9, 0.2};
  const auto r = filter_batch(sampler, cands, policy, FilterMode::two_pass, {}, 3);
  ASSERT_EQ(r.accepted.size(), 4u);

  // Independent ranking: run each prefix on its own and sort.
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    auto t = sampler.begin(cands[i].label, cands[i].seed);
    sampler.advance(t, 10);
    double e = 0.0;
    for (double g : t.ledger.g_values()) e += g * g;
    ranked.emplace_back(e, i);
    EXPECT_EQ(r.partial_asds[i], e);
  }
  std::sort(ranked.rbegin(), ranked.rend());
  std::vector<std::size_t> top;
  for (int j = 0; j < 4; ++j) top.push_back(ranked[j].second);
  std::sort(top.begin(), top.end());
  EXPECT_EQ(r.accepted, top);

  for (std::size_t i : r.accepted) {
    EXPECT_TRUE(r.trajectories[i].finished());
    EXPECT_EQ(r.trajectories[i], sampler.sample(cands[i].label, cands[i].seed));
  }
  for (std::size_t i : r.rejected) {
    EXPECT_EQ(r.trajectories[i].steps_completed, 10u);
    EXPECT_TRUE(r.trajectories[i].terminated_early);
  }
}

TEST(Filter, StreamingMatchesTwoPass) {
  const Fixture f;
  const auto sampler = f.make(16);
  const auto cands = make_candidates(0, 40, 3);
  const RejectionPolicy policy{5, 0.25};
  const auto two = filter_batch(sampler, cands, policy, FilterMode::two_pass, {}, 2);
  const auto stream = filter_batch(sampler, cands, policy, FilterMode::streaming, two.gamma, 4);
  EXPECT_EQ(two.accepted, stream.accepted);
  EXPECT_EQ(two.trajectories, stream.trajectories);
  EXPECT_EQ(two.nfe.total_nfe, stream.nfe.total_nfe);
  EXPECT_EQ(calibrate_threshold(sampler, cands, policy, 1), two.gamma);
}

TEST(Filter, StreamingAcceptsExactlyAtOrAboveGamma) {
  const Fixture f;
  const auto sampler = f.make(16);
  const auto cands = make_candidates(1, 30, 4);
  const RejectionPolicy policy{3, 0.5};
  const double gamma = calibrate_threshold(sampler, make_candidates(1, 30, 5), policy);
  const auto r = filter_batch(sampler, cands, policy, FilterMode::streaming, gamma);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const bool kept = std::find(r.accepted.begin(), r.accepted.end(), i) != r.accepted.end();
    EXPECT_EQ(kept, r.partial_asds[i] >= gamma);
    EXPECT_EQ(r.trajectories[i].finished(), kept);
  }
}

TEST(Filter, Errors) {
  const Fixture f;
  const auto sampler = f.make(8);
  const auto cands = make_candidates(0, 4, 1);
  EXPECT_THROW(filter_batch(sampler, cands, {3, 0.5}, FilterMode::streaming), std::invalid_argument);
  EXPECT_THROW(filter_batch(sampler, cands, {8, 0.5}, FilterMode::two_pass), std::invalid_argument);
  EXPECT_NO_THROW(filter_batch(sampler, cands, {7, 0.5}, FilterMode::two_pass));
  EXPECT_THROW(filter_batch(sampler, {}, {3, 0.5}, FilterMode::two_pass), std::invalid_argument);
}

TEST(Filter, DeterministicAcrossThreadCounts) {
  const Fixture f;
  const auto sampler = f.make(10);
  const auto cands = make_candidates(0, 33, 8);
  const auto a = filter_batch(sampler, cands, {4, 0.3}, FilterMode::two_pass, {}, 1);
  const auto b = filter_batch(sampler, cands, {4, 0.3}, FilterMode::two_pass, {}, 5);
  EXPECT_EQ(a.trajectories, b.trajectories);
  EXPECT_EQ(a.accepted, b.accepted);
  EXPECT_EQ(a.gamma, b.gamma);
}

TEST(Filter, MeasuredSavingsMatchCostModel) {
  const Fixture f;
  for (Solver solver : {Solver::heun, Solver::euler}) {
    const Sampler sampler(f.dist, make_schedule(32, 0.002, 80.0, 7.0), {2.0}, solver);
    const auto cands = make_candidates(0, 100, 6);
    const auto r = filter_batch(sampler, cands, {9, 0.1}, FilterMode::two_pass);
    ASSERT_EQ(r.rejected.size(), 90u);
    const double full = static_cast<double>(full_nfe(sampler.schedule(), solver));
    const double prefix = static_cast<double>(prefix_nfe(sampler.schedule(), solver, 10));
    const double expected = 0.9 * (full - prefix) / full;
    EXPECT_NEAR(r.nfe.saved_fraction, expected, 1e-12);
    EXPECT_NEAR(r.nfe.predicted_saved_fraction, expected, 1e-12);
  }
}
