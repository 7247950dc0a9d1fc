#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cfgreject/geometry.hpp"

namespace cfgreject {

using ClassLabel = int;

/// One anisotropic 2D Gaussian with mixture weight.
struct GaussianComponent {
  double weight = 1.0;
  Vec2 mean;
  Mat2 covariance = Mat2::identity();

  /// Throws std::invalid_argument unless weight > 0 and the covariance is
  /// symmetric positive definite.
  void validate() const;

  friend bool operator==(const GaussianComponent&, const GaussianComponent&) = default;
};

struct ClassMixture {
  ClassLabel label = 0;
  std::vector<GaussianComponent> components;

  friend bool operator==(const ClassMixture&, const ClassMixture&) = default;
};

/// Class-conditional Gaussian mixtures plus class priors. Immutable after
/// construction; the unconditional density is the prior-weighted marginal.
class MixtureDistribution {
 public:
  /// Validates every invariant: nonempty classes, unique labels, component
  /// weights summing to 1 per class and priors summing to 1 (both within
  /// 1e-12), SPD covariances.
  MixtureDistribution(std::vector<ClassMixture> classes, std::vector<double> priors);

  /// Uniform priors.
  explicit MixtureDistribution(std::vector<ClassMixture> classes);

  const std::vector<ClassMixture>& classes() const { return classes_; }
  const std::vector<double>& priors() const { return priors_; }
  std::size_t num_classes() const { return classes_.size(); }
  std::size_t num_components() const;

  /// Position of `label` in classes(). Throws std::invalid_argument for an
  /// unknown label.
  std::size_t class_index(ClassLabel label) const;
  const ClassMixture& mixture(ClassLabel label) const { return classes_[class_index(label)]; }

  friend bool operator==(const MixtureDistribution&, const MixtureDistribution&) = default;

 private:
  std::vector<ClassMixture> classes_;
  std::vector<double> priors_;
};

/// Log-density and score of one (conditional or marginal) density at a point.
struct DensityEvaluation {
  double log_density = 0.0;
  Vec2 score;
};

/// Conditional and unconditional evaluations sharing one pass over the
/// components.
struct ScorePair {
  DensityEvaluation conditional;
  DensityEvaluation unconditional;
};

/// A mixture convolved with N(0, sigma^2 I): every covariance becomes
/// Sigma_i + sigma^2 I. Inverses and normalizers are precomputed, so repeated
/// evaluations at a fixed noise level cost one exp per component.
class NoisyMixture {
 public:
  NoisyMixture(const MixtureDistribution& dist, double sigma);

  double sigma() const { return sigma_; }
  std::size_t num_classes() const { return class_offsets_.size() - 1; }

  DensityEvaluation conditional(Vec2 x, std::size_t class_index) const;
  DensityEvaluation marginal(Vec2 x) const;
  ScorePair pair(Vec2 x, std::size_t class_index) const;

 private:
  struct Term {
    double log_coef;  // log weight - log(2 pi) - log(det)/2
    Vec2 mean;
    double inv_xx, inv_xy, inv_yy;
  };

  DensityEvaluation evaluate_class(Vec2 x, std::size_t class_index) const;
  DensityEvaluation combine(const DensityEvaluation* per_class) const;

  double sigma_;
  std::vector<Term> terms_;
  std::vector<std::size_t> class_offsets_;
  std::vector<double> log_priors_;
};

/// Tree-shaped fractal mixture parameters. Each class owns one tree: a trunk
/// from the origin that splits in two at every level down to `depth`.
struct FractalConfig {
  int depth = 6;
  int components_per_branch = 8;
  double trunk_length = 1.0;
  double branch_scale_decay = 0.8;   // child/parent branch length
  double weight_decay = 0.5;         // per-level factor on branch mass
  double branch_angle = 0.436332313; // 25 degrees
  double anisotropy_ratio = 8.0;     // major/minor std of each component
  double component_spread = 0.06;    // major std as a fraction of branch length
  double jitter = 0.2;               // relative std of length/angle perturbations
  std::uint64_t seed = 2;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Components per class produced by build_fractal_mixture: cpb * (2^(depth+1) - 1).
std::size_t fractal_component_count(const FractalConfig& config);

/// Builds `num_classes` fractal trees with labels 0..num_classes-1 and uniform
/// priors. Class j's trunk points along pi/4 + 2 pi j / num_classes, so every
/// class spans both a dense trunk near the shared origin and sparse branches.
/// Deterministic given config.seed.
MixtureDistribution build_fractal_mixture(const FractalConfig& config, int num_classes);

/// p(x; sigma | cond), or the prior-weighted marginal when cond is empty.
double noisy_density(const MixtureDistribution& dist, Vec2 x, double sigma,
                     std::optional<ClassLabel> cond = std::nullopt);
double noisy_log_density(const MixtureDistribution& dist, Vec2 x, double sigma,
                         std::optional<ClassLabel> cond = std::nullopt);

/// grad_x log p(x; sigma | cond).
Vec2 noisy_score(const MixtureDistribution& dist, Vec2 x, double sigma,
                 std::optional<ClassLabel> cond = std::nullopt);

/// n i.i.d. draws from the mixture of class `label`.
std::vector<Vec2> sample_data(const MixtureDistribution& dist, ClassLabel label, std::size_t n,
                              std::uint64_t seed);

}  // namespace cfgreject
