// Command-line front end: builds distributions, samples, filters, scores,
// analyzes and plots. Exit codes: 0 success, 1 configuration or usage error,
// 2 runtime or I/O failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cfgreject/experiment.hpp"
#include "cfgreject/parallel.hpp"
#include "cfgreject/rejection.hpp"
#include "cfgreject/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cfgreject;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

// Calibration batches for streaming mode use their own seed stream.
constexpr std::uint64_t kCalibrationStream = 0x63616c6962726174ULL;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<double> guidance;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> tau;
  std::optional<double> keep;
  std::optional<std::string> solver;
  std::optional<std::string> scaling;
  std::optional<std::string> out;
  std::optional<std::size_t> samples;
  std::optional<std::size_t> threads;
  std::optional<std::string> dist;
};

void add_common_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "Experiment config JSON")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--guidance", o.guidance, "Guidance weight (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  cmd->add_option("--steps", o.steps, "Number of sampler steps T");
  cmd->add_option("--tau", o.tau, "Rejection step tau");
  cmd->add_option("--keep", o.keep, "Fraction of candidates kept");
  cmd->add_option("--solver", o.solver, "euler or heun")
      ->check(CLI::IsMember({"euler", "heun"}));
  cmd->add_option("--scaling", o.scaling, "raw or sigma")->check(CLI::IsMember({"raw", "sigma"}));
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--samples", o.samples, "Samples per class");
  cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  cmd->add_option("--dist", o.dist, "Mixture JSON to use instead of the fractal");
}

ExperimentConfig resolve_config(const Overrides& o) {
  ExperimentConfig c;
  if (!o.config_path.empty()) {
    json doc;
    try {
      doc = read_json_file(o.config_path);
    } catch (const IoError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    c = config_from_json(doc);
  }
  if (o.seed) c.master_seed = *o.seed;
  if (!o.guidance.empty()) c.guidance_list = o.guidance;
  if (o.steps) c.schedule.steps = *o.steps;
  if (o.tau) c.policy.tau = *o.tau;
  if (o.keep) c.policy.keep_percentile = *o.keep;
  if (o.solver) c.solver = parse_solver(*o.solver);
  if (o.scaling) c.scaling = parse_scaling(*o.scaling);
  if (o.out) c.output_dir = *o.out;
  if (o.samples) c.num_samples = *o.samples;
  if (o.threads) c.threads = *o.threads;
  if (o.dist) c.distribution_file = *o.dist;
  c.validate();
  return c;
}

std::vector<SampleRecord> load_samples(const std::string& path) {
  return samples_from_csv(read_csv(path));
}

void write_json(const fs::path& path, const json& doc) { write_text_file(path, doc.dump(2) + "\n"); }

int cmd_build_dist(const ExperimentConfig& c) {
  const MixtureDistribution dist = resolve_distribution(c);
  const fs::path path = fs::path(c.output_dir) / "mixture.json";
  save_mixture(dist, path);
  std::cout << "wrote " << path.string() << " (" << dist.num_classes() << " classes, "
            << dist.num_components() << " components)\n";
  return 0;
}

int cmd_sample(const ExperimentConfig& c) {
  const MixtureDistribution dist = resolve_distribution(c);
  const NoiseSchedule schedule = make_schedule(c.schedule);
  for (double omega : c.guidance_list) {
    const SampleRun run = sample_all(dist, c, omega);
    const fs::path dir = fs::path(c.output_dir) / omega_dir_name(omega);
    write_text_file(dir / "samples.csv", samples_to_csv(run.records));
    write_text_file(dir / "ledgers.csv", ledgers_to_csv(run.records, run.trajectories, schedule));
    std::cout << "wrote " << run.records.size() << " samples to " << dir.string() << "\n";
  }
  return 0;
}

int cmd_filter(const ExperimentConfig& c, const std::string& mode_text,
               std::optional<double> gamma, const std::string& input) {
  const FilterMode mode = mode_text == "streaming" ? FilterMode::streaming : FilterMode::two_pass;
  const MixtureDistribution dist = resolve_distribution(c);
  const NoiseSchedule schedule = make_schedule(c.schedule);

  std::vector<Candidate> candidates;
  std::vector<std::size_t> indices;
  if (input.empty()) {
    candidates = experiment_candidates(dist, c);
    for (std::size_t i = 0; i < candidates.size(); ++i) indices.push_back(i);
  } else {
    for (const auto& r : load_samples(input)) {
      candidates.push_back({r.label, r.seed});
      indices.push_back(r.index);
    }
  }
  // Each class is filtered as its own batch, keeping file order inside it.
  std::map<ClassLabel, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < candidates.size(); ++i) by_class[candidates[i].label].push_back(i);

  for (double omega : c.guidance_list) {
    const Sampler sampler(dist, schedule, {omega, c.scaling}, c.solver);
    std::vector<SampleRecord> records(candidates.size());
    json classes = json::array();
    std::size_t total_nfe = 0, full_batch_nfe = 0, accepted_total = 0;
    for (const auto& [label, members] : by_class) {
      std::vector<Candidate> batch;
      for (std::size_t i : members) batch.push_back(candidates[i]);
      std::optional<double> g = gamma;
      if (mode == FilterMode::streaming && !g) {
        const auto calib = make_candidates(
            label, batch.size(),
            derive_seed(c.master_seed ^ kCalibrationStream, dist.class_index(label)));
        g = calibrate_threshold(sampler, calib, c.policy, c.threads);
      }
      const FilterResult res = filter_batch(sampler, batch, c.policy, mode, g, c.threads);
      const auto recs = make_records(res.trajectories, c.policy.tau);
      for (std::size_t j = 0; j < members.size(); ++j) {
        records[members[j]] = recs[j];
        records[members[j]].index = indices[members[j]];
      }
      total_nfe += res.nfe.total_nfe;
      full_batch_nfe += res.nfe.full_batch_nfe;
      accepted_total += res.accepted.size();
      classes.push_back({{"class", label},
                         {"gamma", res.gamma},
                         {"candidates", batch.size()},
                         {"accepted", res.accepted.size()},
                         {"rejected", res.rejected.size()},
                         {"total_nfe", res.nfe.total_nfe},
                         {"full_batch_nfe", res.nfe.full_batch_nfe},
                         {"nfe_saved_fraction", res.nfe.saved_fraction},
                         {"predicted_nfe_saved_fraction", res.nfe.predicted_saved_fraction}});
    }
    score_records(dist, records, c.density.k, c.threads);
    const fs::path dir = fs::path(c.output_dir) / omega_dir_name(omega);
    write_text_file(dir / "samples.csv", samples_to_csv(records));
    const double saved =
        full_batch_nfe ? 1.0 - static_cast<double>(total_nfe) / static_cast<double>(full_batch_nfe)
                       : 0.0;
    write_json(dir / "filter.json", {{"omega", omega},
                                     {"mode", mode == FilterMode::streaming ? "streaming" : "two-pass"},
                                     {"tau", c.policy.tau},
                                     {"keep", c.policy.keep_percentile},
                                     {"accepted", accepted_total},
                                     {"candidates", candidates.size()},
                                     {"total_nfe", total_nfe},
                                     {"full_batch_nfe", full_batch_nfe},
                                     {"nfe_saved_fraction", saved},
                                     {"classes", classes}});
    std::cout << "omega " << format_double(omega) << ": accepted " << accepted_total << " of "
              << candidates.size() << ", NFE saved " << saved << "\n";
  }
  return 0;
}

int cmd_density(const ExperimentConfig& c, const std::string& input) {
  const MixtureDistribution dist = resolve_distribution(c);
  auto records = load_samples(input);
  score_records(dist, records, c.density.k, c.threads);
  const fs::path path = fs::path(c.output_dir) / "samples.csv";
  write_text_file(path, samples_to_csv(records));
  std::cout << "scored " << records.size() << " samples into " << path.string() << "\n";
  return 0;
}

int cmd_analyze(const ExperimentConfig& c, const std::string& input, bool skip_budget) {
  const MixtureDistribution dist = resolve_distribution(c);
  auto records = load_samples(input);
  bool unscored = false;
  for (const auto& r : records) unscored |= r.finished() && !r.true_log_density;
  if (unscored) score_records(dist, records, c.density.k, c.threads);

  const double omega = c.guidance_list.front();
  OmegaSummary summary = summarize(c, omega, records);
  if (!skip_budget) add_budget_comparisons(summary, dist, c);
  const fs::path dir = c.output_dir;
  write_text_file(dir / "curve.csv",
                  summary.curve
                      ? curve_to_csv(*summary.curve)
                      : std::string("bin,asd_lo,asd_hi,count,mean_asd,mean_log_density\n"));
  write_text_file(dir / "ranks.csv", ranks_to_csv(summary.ranks));
  write_text_file(dir / "budget.csv", budget_to_csv(summary.budgets));
  write_json(dir / "summary.json", summary_to_json(summary));
  std::cout << "analysis written to " << dir.string() << "\n";
  return 0;
}

int cmd_plot(const ExperimentConfig& c, const std::string& input) {
  const CsvTable table = read_csv(input);
  const fs::path dir = c.output_dir;
  const auto has = [&](const char* name) {
    for (const auto& h : table.header) {
      if (h == name) return true;
    }
    return false;
  };
  if (has("mean_asd") && has("mean_log_density")) {
    const std::size_t cx = table.column("mean_asd");
    const std::size_t cy = table.column("mean_log_density");
    std::vector<double> xs, ys;
    for (const auto& row : table.rows) {
      if (row[cx].empty() || row[cy].empty()) continue;
      xs.push_back(std::stod(row[cx]));
      ys.push_back(std::stod(row[cy]));
    }
    std::optional<FitLine> fit;
    if (xs.size() >= 2) {
      try {
        const LinearFit line = least_squares(xs, ys);
        fit = FitLine{line.slope, line.intercept};
      } catch (const std::invalid_argument&) {
      }
    }
    write_text_file(dir / "curve.svg", curve_svg(xs, ys, fit, "Binned ASD vs log density",
                                                  "ASD (bin mean)", "log density (bin mean)"));
    std::cout << "wrote " << (dir / "curve.svg").string() << "\n";
  } else if (has("x0") && has("asd_full")) {
    const auto records = samples_from_csv(table);
    write_text_file(dir / "scatter.svg", scatter_svg_for(records, "Samples colored by ASD"));
    std::cout << "wrote " << (dir / "scatter.svg").string() << "\n";
  } else {
    throw IoError(input + ": not a samples.csv or curve.csv table");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CFG-Rejection toolkit: accumulated score differences on a 2D fractal mixture"};
  app.require_subcommand(1);
  Overrides o;
  std::string input, mode = "two-pass";
  std::optional<double> gamma;
  bool skip_budget = false;

  auto* build = app.add_subcommand("build-dist", "Write the mixture as JSON");
  auto* sample = app.add_subcommand("sample", "Sample trajectories and their ASD ledgers");
  auto* filter = app.add_subcommand("filter", "Apply the rejection policy to a batch");
  auto* density = app.add_subcommand("density", "Score an existing samples.csv");
  auto* analyze = app.add_subcommand("analyze", "Curves, ranks, correlations and budget");
  auto* plot = app.add_subcommand("plot", "Render samples.csv or curve.csv as SVG");
  auto* run = app.add_subcommand("run", "Full pipeline for every guidance weight");
  for (auto* cmd : {build, sample, filter, density, analyze, plot, run}) add_common_flags(cmd, o);

  filter->add_option("--mode", mode, "two-pass or streaming")
      ->check(CLI::IsMember({"two-pass", "streaming"}));
  filter->add_option("--gamma", gamma, "Fixed threshold for streaming mode");
  filter->add_option("--input", input, "Take candidates from this samples.csv")
      ->check(CLI::ExistingFile);
  for (auto* cmd : {density, analyze, plot}) {
    cmd->add_option("--input", input, "Input CSV")->required()->check(CLI::ExistingFile);
  }
  analyze->add_flag("--no-budget", skip_budget, "Skip the budget comparison");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const ExperimentConfig c = resolve_config(o);
    if (*build) return cmd_build_dist(c);
    if (*sample) return cmd_sample(c);
    if (*filter) return cmd_filter(c, mode, gamma, input);
    if (*density) return cmd_density(c, input);
    if (*analyze) return cmd_analyze(c, input, skip_budget);
    if (*plot) return cmd_plot(c, input);
    run_experiment(c);
    std::cout << "wrote results for " << c.guidance_list.size() << " guidance weight(s) to "
              << c.output_dir << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
