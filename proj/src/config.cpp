#include "cfgreject/config.hpp"

#include <cmath>
#include <set>

namespace cfgreject {

using nlohmann::json;

std::string to_string(Solver solver) { return solver == Solver::heun ? "heun" : "euler"; }

std::string to_string(ScoreScaling scaling) {
  return scaling == ScoreScaling::sigma_scaled ? "sigma" : "raw";
}

Solver parse_solver(const std::string& text) {
  if (text == "heun") return Solver::heun;
  if (text == "euler") return Solver::euler;
  throw ConfigError("solver: expected 'euler' or 'heun', got '" + text + "'");
}

ScoreScaling parse_scaling(const std::string& text) {
  if (text == "sigma") return ScoreScaling::sigma_scaled;
  if (text == "raw") return ScoreScaling::raw_score;
  throw ConfigError("scaling: expected 'raw' or 'sigma', got '" + text + "'");
}

namespace {

void reject_unknown(const json& obj, const std::string& where, std::set<std::string> known) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!known.contains(key)) {
      throw ConfigError((where.empty() ? "" : where + ".") + key + ": unknown field");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError((where.empty() ? "" : where + ".") + key + ": wrong type");
  }
}

}  // namespace

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig c;
  reject_unknown(doc, "", {"fractal", "num_classes", "distribution_file", "schedule", "solver",
                           "guidance", "scaling", "num_samples", "policy", "density", "analysis",
                           "master_seed", "output_dir", "threads"});
  if (doc.contains("fractal")) {
    const auto& f = doc["fractal"];
    reject_unknown(f, "fractal",
                   {"depth", "components_per_branch", "trunk_length", "branch_scale_decay",
                    "weight_decay", "branch_angle", "anisotropy_ratio", "component_spread",
                    "jitter", "seed"});
    read(f, "depth", "fractal", c.fractal.depth);
    read(f, "components_per_branch", "fractal", c.fractal.components_per_branch);
    read(f, "trunk_length", "fractal", c.fractal.trunk_length);
    read(f, "branch_scale_decay", "fractal", c.fractal.branch_scale_decay);
    read(f, "weight_decay", "fractal", c.fractal.weight_decay);
    read(f, "branch_angle", "fractal", c.fractal.branch_angle);
    read(f, "anisotropy_ratio", "fractal", c.fractal.anisotropy_ratio);
    read(f, "component_spread", "fractal", c.fractal.component_spread);
    read(f, "jitter", "fractal", c.fractal.jitter);
    read(f, "seed", "fractal", c.fractal.seed);
  }
  read(doc, "num_classes", "", c.num_classes);
  if (doc.contains("distribution_file") && !doc["distribution_file"].is_null()) {
    std::string path;
    read(doc, "distribution_file", "", path);
    c.distribution_file = path;
  }
  if (doc.contains("schedule")) {
    const auto& s = doc["schedule"];
    reject_unknown(s, "schedule", {"steps", "sigma_min", "sigma_max", "rho"});
    read(s, "steps", "schedule", c.schedule.steps);
    read(s, "sigma_min", "schedule", c.schedule.sigma_min);
    read(s, "sigma_max", "schedule", c.schedule.sigma_max);
    read(s, "rho", "schedule", c.schedule.rho);
  }
  if (doc.contains("solver")) {
    std::string s;
    read(doc, "solver", "", s);
    c.solver = parse_solver(s);
  }
  read(doc, "guidance", "", c.guidance_list);
  if (doc.contains("scaling")) {
    std::string s;
    read(doc, "scaling", "", s);
    c.scaling = parse_scaling(s);
  }
  read(doc, "num_samples", "", c.num_samples);
  if (doc.contains("policy")) {
    const auto& p = doc["policy"];
    reject_unknown(p, "policy", {"tau", "keep"});
    read(p, "tau", "policy", c.policy.tau);
    read(p, "keep", "policy", c.policy.keep_percentile);
  }
  if (doc.contains("density")) {
    reject_unknown(doc["density"], "density", {"k"});
    read(doc["density"], "k", "density", c.density.k);
  }
  if (doc.contains("analysis")) {
    const auto& a = doc["analysis"];
    reject_unknown(a, "analysis", {"n_bins", "n_ranks", "budget_fraction"});
    read(a, "n_bins", "analysis", c.analysis.n_bins);
    read(a, "n_ranks", "analysis", c.analysis.n_ranks);
    read(a, "budget_fraction", "analysis", c.analysis.budget_fraction);
  }
  read(doc, "master_seed", "", c.master_seed);
  read(doc, "output_dir", "", c.output_dir);
  read(doc, "threads", "", c.threads);
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  const auto& f = c.fractal;
  json doc = {
      {"fractal",
       {{"depth", f.depth},
        {"components_per_branch", f.components_per_branch},
        {"trunk_length", f.trunk_length},
        {"branch_scale_decay", f.branch_scale_decay},
        {"weight_decay", f.weight_decay},
        {"branch_angle", f.branch_angle},
        {"anisotropy_ratio", f.anisotropy_ratio},
        {"component_spread", f.component_spread},
        {"jitter", f.jitter},
        {"seed", f.seed}}},
      {"num_classes", c.num_classes},
      {"distribution_file", c.distribution_file ? json(*c.distribution_file) : json(nullptr)},
      {"schedule",
       {{"steps", c.schedule.steps},
        {"sigma_min", c.schedule.sigma_min},
        {"sigma_max", c.schedule.sigma_max},
        {"rho", c.schedule.rho}}},
      {"solver", to_string(c.solver)},
      {"guidance", c.guidance_list},
      {"scaling", to_string(c.scaling)},
      {"num_samples", c.num_samples},
      {"policy", {{"tau", c.policy.tau}, {"keep", c.policy.keep_percentile}}},
      {"density", {{"k", c.density.k}}},
      {"analysis",
       {{"n_bins", c.analysis.n_bins},
        {"n_ranks", c.analysis.n_ranks},
        {"budget_fraction", c.analysis.budget_fraction}}},
      {"master_seed", c.master_seed},
      {"output_dir", c.output_dir},
      {"threads", c.threads},
  };
  return doc;
}

void ExperimentConfig::validate() const {
  try {
    if (!distribution_file) fractal.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (num_classes < 2) throw ConfigError("num_classes: must be >= 2");
  if (schedule.steps < 1) throw ConfigError("schedule.steps: must be >= 1");
  if (!(schedule.sigma_min > 0.0)) throw ConfigError("schedule.sigma_min: must be > 0");
  if (!(schedule.sigma_max > schedule.sigma_min) || !std::isfinite(schedule.sigma_max)) {
    throw ConfigError("schedule.sigma_max: must be finite and > sigma_min");
  }
  if (!(schedule.rho >= 1.0)) throw ConfigError("schedule.rho: must be >= 1");
  if (guidance_list.empty()) throw ConfigError("guidance: must list at least one value");
  for (double w : guidance_list) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("guidance: values must be >= 0");
  }
  if (num_samples < 1) throw ConfigError("num_samples: must be >= 1");
  if (policy.tau < 1 || policy.tau + 1 > schedule.steps) {
    throw ConfigError("policy.tau: must satisfy 1 <= tau <= steps - 1");
  }
  if (!(policy.keep_percentile > 0.0 && policy.keep_percentile <= 1.0)) {
    throw ConfigError("policy.keep: must lie in (0, 1]");
  }
  if (density.k < 1) throw ConfigError("density.k: must be >= 1");
  if (analysis.n_bins < 2) throw ConfigError("analysis.n_bins: must be >= 2");
  if (analysis.n_ranks < 1) throw ConfigError("analysis.n_ranks: must be >= 1");
  if (!(analysis.budget_fraction > 0.0)) {
    throw ConfigError("analysis.budget_fraction: must be > 0");
  }
  if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
}

}  // namespace cfgreject
