#include "cfgreject/density.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cfgreject/parallel.hpp"

namespace cfgreject {

namespace {

constexpr std::size_t kNoSelf = static_cast<std::size_t>(-1);
constexpr double kReachFloor = 1e-12;

double distance(const Vec2& a, const Vec2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

// Distances from `query` to every reference point except `self`, sorted
// ascending by (distance, index) up to the first `count` entries.
struct Neighbor {
  double dist;
  std::size_t index;
  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.dist < b.dist || (a.dist == b.dist && a.index < b.index);
  }
};

void nearest(const Vec2& query, std::span<const Vec2> reference, std::size_t self,
             std::size_t count, std::vector<Neighbor>& buffer) {
  buffer.clear();
  for (std::size_t j = 0; j < reference.size(); ++j) {
    if (j != self) buffer.push_back({distance(query, reference[j]), j});
  }
  std::nth_element(buffer.begin(), buffer.begin() + (count - 1), buffer.end());
  std::sort(buffer.begin(), buffer.begin() + count);
}

std::vector<double> knn_means(std::span<const Vec2> queries, std::span<const Vec2> reference,
                              std::size_t k, bool exclude_self, std::size_t threads) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const std::size_t usable = reference.size() - (exclude_self && !reference.empty() ? 1 : 0);
  if (k > usable) {
    throw std::invalid_argument("k=" + std::to_string(k) + " exceeds the " +
                                std::to_string(usable) + " usable reference points");
  }
  std::vector<double> out(queries.size());
  parallel_for(queries.size(), threads, [&](std::size_t i) {
    thread_local std::vector<Neighbor> buffer;
    nearest(queries[i], reference, exclude_self ? i : kNoSelf, k, buffer);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += buffer[j].dist;
    out[i] = total / static_cast<double>(k);
  });
  return out;
}

}  // namespace

std::vector<double> avg_knn_scores(std::span<const Vec2> queries, std::span<const Vec2> reference,
                                   std::size_t k, std::size_t threads) {
  return knn_means(queries, reference, k, false, threads);
}

std::vector<double> avg_knn_scores(std::span<const Vec2> points, std::size_t k,
                                   std::size_t threads) {
  return knn_means(points, points, k, true, threads);
}

std::vector<double> lof_scores(std::span<const Vec2> points, std::size_t k, std::size_t threads) {
  const std::size_t n = points.size();
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (n <= k) {
    throw std::invalid_argument("LOF needs more than k=" + std::to_string(k) + " points, got " +
                                std::to_string(n));
  }

  // k-distance and the (tie-inclusive) k-neighborhood of every point.
  std::vector<double> k_distance(n);
  std::vector<std::vector<Neighbor>> hood(n);
  parallel_for(n, threads, [&](std::size_t i) {
    thread_local std::vector<Neighbor> buffer;
    nearest(points[i], points, i, k, buffer);
    const double kd = buffer[k - 1].dist;
    k_distance[i] = kd;
    auto& mine = hood[i];
    mine.assign(buffer.begin(), buffer.begin() + k);
    for (std::size_t j = k; j < buffer.size(); ++j) {
      if (buffer[j].dist <= kd) mine.push_back(buffer[j]);
    }
  });

  std::vector<double> lrd(n);
  parallel_for(n, threads, [&](std::size_t i) {
    double reach = 0.0;
    for (const auto& nb : hood[i]) reach += std::max(k_distance[nb.index], nb.dist);
    lrd[i] = 1.0 / std::max(kReachFloor, reach / static_cast<double>(hood[i].size()));
  });

  std::vector<double> out(n);
  parallel_for(n, threads, [&](std::size_t i) {
    double ratio = 0.0;
    for (const auto& nb : hood[i]) ratio += lrd[nb.index] / lrd[i];
    out[i] = ratio / static_cast<double>(hood[i].size());
  });
  return out;
}

std::vector<double> true_log_density_batch(const MixtureDistribution& dist,
                                           std::span<const Vec2> points,
                                           std::optional<ClassLabel> cond, double sigma) {
  const NoisyMixture noisy(dist, sigma);
  std::vector<double> out;
  out.reserve(points.size());
  if (cond) {
    const std::size_t ci = dist.class_index(*cond);
    for (const auto& p : points) out.push_back(noisy.conditional(p, ci).log_density);
  } else {
    for (const auto& p : points) out.push_back(noisy.marginal(p).log_density);
  }
  return out;
}

}  // namespace cfgreject
