#include "cfgreject/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "cfgreject/parallel.hpp"

namespace cfgreject {

namespace {

constexpr double kSumTolerance = 1e-12;
const double kLogTwoPi = std::log(2.0 * std::numbers::pi);

double plain_sum(std::span<const double> values) {
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

}  // namespace

void GaussianComponent::validate() const {
  if (!(weight > 0.0) || !std::isfinite(weight)) {
    throw std::invalid_argument("component weight must be positive and finite, got " +
                                std::to_string(weight));
  }
  if (!std::isfinite(mean.x) || !std::isfinite(mean.y)) {
    throw std::invalid_argument("component mean must be finite");
  }
  if (!covariance.is_symmetric()) {
    throw std::invalid_argument("component covariance is not symmetric");
  }
  if (!(covariance.xx > 0.0) || !(covariance.determinant() > 0.0) ||
      !(min_eigenvalue(covariance) > 0.0) || !std::isfinite(covariance.determinant())) {
    throw std::invalid_argument("component covariance is not positive definite");
  }
}

MixtureDistribution::MixtureDistribution(std::vector<ClassMixture> classes,
                                         std::vector<double> priors)
    : classes_(std::move(classes)), priors_(std::move(priors)) {
  if (classes_.empty()) throw std::invalid_argument("mixture needs at least one class");
  if (priors_.size() != classes_.size()) {
    throw std::invalid_argument("expected one prior per class");
  }
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    const auto& cls = classes_[i];
    for (std::size_t j = 0; j < i; ++j) {
      if (classes_[j].label == cls.label) {
        throw std::invalid_argument("duplicate class label " + std::to_string(cls.label));
      }
    }
    if (cls.components.empty()) {
      throw std::invalid_argument("class " + std::to_string(cls.label) + " has no components");
    }
    std::vector<double> weights;
    weights.reserve(cls.components.size());
    for (const auto& c : cls.components) {
      c.validate();
      weights.push_back(c.weight);
    }
    if (std::abs(plain_sum(weights) - 1.0) > kSumTolerance) {
      throw std::invalid_argument("component weights of class " + std::to_string(cls.label) +
                                  " do not sum to 1");
    }
    if (!(priors_[i] > 0.0)) throw std::invalid_argument("class priors must be positive");
  }
  if (std::abs(plain_sum(priors_) - 1.0) > kSumTolerance) {
    throw std::invalid_argument("class priors do not sum to 1");
  }
}

MixtureDistribution::MixtureDistribution(std::vector<ClassMixture> classes)
    : MixtureDistribution(classes,
                          std::vector<double>(classes.size(),
                                              classes.empty() ? 0.0 : 1.0 / classes.size())) {}

std::size_t MixtureDistribution::num_components() const {
  std::size_t n = 0;
  for (const auto& c : classes_) n += c.components.size();
  return n;
}

std::size_t MixtureDistribution::class_index(ClassLabel label) const {
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i].label == label) return i;
  }
  throw std::invalid_argument("unknown class label " + std::to_string(label));
}

NoisyMixture::NoisyMixture(const MixtureDistribution& dist, double sigma) : sigma_(sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("noise level must be finite and >= 0");
  }
  const double var = sigma * sigma;
  terms_.reserve(dist.num_components());
  class_offsets_.push_back(0);
  for (std::size_t c = 0; c < dist.num_classes(); ++c) {
    for (const auto& comp : dist.classes()[c].components) {
      const Mat2 s = comp.covariance + Mat2::diagonal(var, var);
      const double det = s.determinant();
      terms_.push_back(Term{
          .log_coef = std::log(comp.weight) - kLogTwoPi - 0.5 * std::log(det),
          .mean = comp.mean,
          .inv_xx = s.yy / det,
          .inv_xy = -s.xy / det,
          .inv_yy = s.xx / det,
      });
    }
    class_offsets_.push_back(terms_.size());
    log_priors_.push_back(std::log(dist.priors()[c]));
  }
}

// Single pass log-sum-exp: the running maximum only moves forward, and the
// accumulated mass and score are rescaled when it does.
DensityEvaluation NoisyMixture::evaluate_class(Vec2 x, std::size_t class_index) const {
  double max_log = -std::numeric_limits<double>::infinity();
  double mass = 0.0;
  Vec2 weighted_score;
  for (std::size_t i = class_offsets_[class_index]; i < class_offsets_[class_index + 1]; ++i) {
    const Term& t = terms_[i];
    const double dx = x.x - t.mean.x;
    const double dy = x.y - t.mean.y;
    const double ux = t.inv_xx * dx + t.inv_xy * dy;
    const double uy = t.inv_xy * dx + t.inv_yy * dy;
    const double log_term = t.log_coef - 0.5 * (dx * ux + dy * uy);
    if (log_term > max_log) {
      const double rescale = std::exp(max_log - log_term);
      mass = mass * rescale + 1.0;
      weighted_score = weighted_score * rescale - Vec2{ux, uy};
      max_log = log_term;
    } else {
      const double e = std::exp(log_term - max_log);
      mass += e;
      weighted_score -= Vec2{ux, uy} * e;
    }
  }
  return {max_log + std::log(mass), weighted_score * (1.0 / mass)};
}

DensityEvaluation NoisyMixture::combine(const DensityEvaluation* per_class) const {
  const std::size_t n = num_classes();
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < n; ++c) {
    max_log = std::max(max_log, log_priors_[c] + per_class[c].log_density);
  }
  double mass = 0.0;
  Vec2 score;
  for (std::size_t c = 0; c < n; ++c) {
    const double e = std::exp(log_priors_[c] + per_class[c].log_density - max_log);
    mass += e;
    score += per_class[c].score * e;
  }
  return {max_log + std::log(mass), score * (1.0 / mass)};
}

DensityEvaluation NoisyMixture::conditional(Vec2 x, std::size_t class_index) const {
  if (class_index >= num_classes()) throw std::out_of_range("class index out of range");
  return evaluate_class(x, class_index);
}

DensityEvaluation NoisyMixture::marginal(Vec2 x) const {
  std::vector<DensityEvaluation> per_class(num_classes());
  for (std::size_t c = 0; c < per_class.size(); ++c) per_class[c] = evaluate_class(x, c);
  return combine(per_class.data());
}

ScorePair NoisyMixture::pair(Vec2 x, std::size_t class_index) const {
  if (class_index >= num_classes()) throw std::out_of_range("class index out of range");
  constexpr std::size_t kInline = 8;
  DensityEvaluation inline_buf[kInline];
  std::vector<DensityEvaluation> heap_buf;
  DensityEvaluation* per_class = inline_buf;
  if (num_classes() > kInline) {
    heap_buf.resize(num_classes());
    per_class = heap_buf.data();
  }
  for (std::size_t c = 0; c < num_classes(); ++c) per_class[c] = evaluate_class(x, c);
  return {per_class[class_index], combine(per_class)};
}

void FractalConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("fractal." + field + ": " + why);
  };
  if (depth < 0) fail("depth", "must be >= 0");
  if (depth > 20) fail("depth", "must be <= 20");
  if (components_per_branch < 1) fail("components_per_branch", "must be >= 1");
  if (!(trunk_length > 0.0) || !std::isfinite(trunk_length)) fail("trunk_length", "must be > 0");
  if (!(branch_scale_decay > 0.0 && branch_scale_decay < 1.0)) {
    fail("branch_scale_decay", "must lie in (0, 1)");
  }
  if (!(weight_decay > 0.0 && weight_decay <= 1.0)) fail("weight_decay", "must lie in (0, 1]");
  if (!std::isfinite(branch_angle)) fail("branch_angle", "must be finite");
  if (!(anisotropy_ratio >= 1.0) || !std::isfinite(anisotropy_ratio)) {
    fail("anisotropy_ratio", "must be >= 1");
  }
  if (!(component_spread > 0.0) || !std::isfinite(component_spread)) {
    fail("component_spread", "must be > 0");
  }
  if (!(jitter >= 0.0 && jitter < 1.0)) fail("jitter", "must lie in [0, 1)");
}

std::size_t fractal_component_count(const FractalConfig& config) {
  const std::size_t branches = (std::size_t{1} << (config.depth + 1)) - 1;
  return branches * static_cast<std::size_t>(config.components_per_branch);
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const FractalConfig& config, std::uint64_t seed)
      : config_(config), rng_(seed) {}

  std::vector<GaussianComponent> build(double root_angle) {
    components_.clear();
    grow(0, Vec2{}, root_angle);
    double total = 0.0;
    for (const auto& c : components_) total += c.weight;
    for (auto& c : components_) c.weight /= total;
    return std::move(components_);
  }

 private:
  double perturbation() {
    // Clamped so a pathological draw can never flip a length or angle sign.
    return std::clamp(1.0 + config_.jitter * normal_(rng_), 0.25, 1.75);
  }

  void grow(int level, Vec2 origin, double angle) {
    if (level > config_.depth) return;
    const Vec2 dir{std::cos(angle), std::sin(angle)};
    const double length =
        config_.trunk_length * std::pow(config_.branch_scale_decay, level) * perturbation();
    const double branch_mass = length * std::pow(config_.weight_decay, level);
    const double major = config_.component_spread * length;
    const double minor = major / config_.anisotropy_ratio;
    const double major_var = major * major;
    const double minor_var = minor * minor;
    // major_var * d d^T + minor_var * (I - d d^T); the off-diagonal entry is
    // computed once so the stored matrix is exactly symmetric.
    const double off = (major_var - minor_var) * dir.x * dir.y;
    const Mat2 cov{minor_var + (major_var - minor_var) * dir.x * dir.x, off, off,
                   minor_var + (major_var - minor_var) * dir.y * dir.y};

    const int n = config_.components_per_branch;
    for (int i = 0; i < n; ++i) {
      const double t = n == 1 ? 0.5 : 0.07 + 0.86 * static_cast<double>(i) / (n - 1);
      GaussianComponent comp{branch_mass / n, origin + dir * (length * t), cov};
      comp.validate();
      components_.push_back(comp);
    }

    const Vec2 tip = origin + dir * length;
    for (double sign : {1.0, -1.0}) {
      grow(level + 1, tip, angle + sign * config_.branch_angle * perturbation());
    }
  }

  const FractalConfig& config_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  std::vector<GaussianComponent> components_;
};

}  // namespace

MixtureDistribution build_fractal_mixture(const FractalConfig& config, int num_classes) {
  if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
  config.validate();
  std::vector<ClassMixture> classes;
  classes.reserve(num_classes);
  for (int j = 0; j < num_classes; ++j) {
    const double root_angle = std::numbers::pi / 4 + 2.0 * std::numbers::pi * j / num_classes;
    TreeBuilder builder(config, derive_seed(config.seed, static_cast<std::uint64_t>(j)));
    classes.push_back(ClassMixture{j, builder.build(root_angle)});
  }
  return MixtureDistribution(std::move(classes));
}

namespace {

DensityEvaluation evaluate(const MixtureDistribution& dist, Vec2 x, double sigma,
                           std::optional<ClassLabel> cond) {
  const NoisyMixture noisy(dist, sigma);
  if (cond) return noisy.conditional(x, dist.class_index(*cond));
  return noisy.marginal(x);
}

}  // namespace

double noisy_log_density(const MixtureDistribution& dist, Vec2 x, double sigma,
                         std::optional<ClassLabel> cond) {
  return evaluate(dist, x, sigma, cond).log_density;
}

double noisy_density(const MixtureDistribution& dist, Vec2 x, double sigma,
                     std::optional<ClassLabel> cond) {
  return std::exp(noisy_log_density(dist, x, sigma, cond));
}

Vec2 noisy_score(const MixtureDistribution& dist, Vec2 x, double sigma,
                 std::optional<ClassLabel> cond) {
  return evaluate(dist, x, sigma, cond).score;
}

std::vector<Vec2> sample_data(const MixtureDistribution& dist, ClassLabel label, std::size_t n,
                              std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  const auto& components = dist.mixture(label).components;
  std::vector<double> weights;
  struct Factor {
    double l00, l10, l11;
  };
  std::vector<Factor> factors;
  for (const auto& c : components) {
    weights.push_back(c.weight);
    const double l00 = std::sqrt(c.covariance.xx);
    const double l10 = c.covariance.yx / l00;
    factors.push_back({l00, l10, std::sqrt(c.covariance.yy - l10 * l10)});
  }
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::normal_distribution<double> normal;
  std::vector<Vec2> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = pick(rng);
    const double z0 = normal(rng);
    const double z1 = normal(rng);
    const auto& f = factors[k];
    out.push_back(components[k].mean + Vec2{f.l00 * z0, f.l10 * z0 + f.l11 * z1});
  }
  return out;
}

}  // namespace cfgreject
