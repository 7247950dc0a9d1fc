#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "cfgreject/asd.hpp"
#include "cfgreject/distribution.hpp"
#include "cfgreject/sampler.hpp"

namespace cfgreject {

/// Invalid configuration. what() starts with the dotted path of the field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ScheduleConfig {
  std::size_t steps = 32;
  double sigma_min = 0.002;
  double sigma_max = 80.0;
  double rho = 7.0;
};

struct DensityConfig {
  std::size_t k = 5;
};

struct AnalysisConfig {
  std::size_t n_bins = 50;
  std::size_t n_ranks = 4;
  /// Budget for the CFG-Rejection vs Best-of-N comparison, as a fraction of
  /// the cost of fully denoising num_samples candidates.
  double budget_fraction = 0.4;
};

struct ExperimentConfig {
  FractalConfig fractal;
  int num_classes = 2;
  std::optional<std::string> distribution_file;  // load instead of building
  ScheduleConfig schedule;
  Solver solver = Solver::heun;
  std::vector<double> guidance_list{2.0};
  ScoreScaling scaling = ScoreScaling::sigma_scaled;
  std::size_t num_samples = 4096;  // per class
  RejectionPolicy policy{10, 0.1};
  DensityConfig density;
  AnalysisConfig analysis;
  std::uint64_t master_seed = 0;
  std::string output_dir = "out";
  std::size_t threads = 0;  // 0 = hardware concurrency

  /// Checks every field; throws ConfigError naming the first bad one.
  void validate() const;
};

/// Missing fields keep their defaults; unknown fields are rejected.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& config);

std::string to_string(Solver solver);
std::string to_string(ScoreScaling scaling);
Solver parse_solver(const std::string& text);
ScoreScaling parse_scaling(const std::string& text);

}  // namespace cfgreject
