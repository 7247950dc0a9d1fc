#include <gtest/gtest.h>

#include <filesystem>
#include <limits>
#include <random>

#include "cfgreject/config.hpp"
#include "cfgreject/io.hpp"

using namespace cfgreject;
using nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "cfgreject_unit";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string config_error(const json& doc) {
  try {
    config_from_json(doc).validate();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(format_double(-1.5e-7), "-1.5e-07");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_optional(std::nullopt), "");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 20 - 10);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(MixtureJson, FileRoundTripIsBitExact) {
  const auto dist = build_fractal_mixture(FractalConfig{}, 3);
  const auto path = scratch("mixture.json");
  save_mixture(dist, path);
  const auto back = load_mixture(path);
  EXPECT_EQ(back, dist);
  EXPECT_EQ(mixture_to_json(back), mixture_to_json(dist));
}

TEST(MixtureJson, PriorsOptional) {
  const json doc = {
      {"classes",
       {{{"label", 4}, {"components", {{{"weight", 1.0}, {"mean", {0, 1}}, {"cov", {{1, 0}, {0, 2}}}}}}},
        {{"label", 7}, {"components", {{{"weight", 1.0}, {"mean", {1, 1}}, {"cov", {{1, 0}, {0, 1}}}}}}}}}};
  const auto dist = mixture_from_json(doc);
  EXPECT_EQ(dist.num_classes(), 2u);
  EXPECT_EQ(dist.priors(), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(dist.class_index(7), 1u);
}

TEST(MixtureJson, Malformed) {
  EXPECT_THROW(mixture_from_json(json::object()), IoError);
  const json bad_mean = {
      {"classes", {{{"label", 0}, {"components", {{{"weight", 1.0}, {"mean", {0}}, {"cov", {{1, 0}, {0, 1}}}}}}}}}};
  EXPECT_THROW(mixture_from_json(bad_mean), IoError);
  const json not_psd = {
      {"classes", {{{"label", 0}, {"components", {{{"weight", 1.0}, {"mean", {0, 0}}, {"cov", {{1, 3}, {3, 1}}}}}}}}}};
  EXPECT_ANY_THROW(mixture_from_json(not_psd));
  EXPECT_THROW(load_mixture(scratch("does_not_exist.json")), IoError);
}

TEST(Csv, ReadsEmptyTrailingCells) {
  const auto path = scratch("table.csv");
  write_text_file(path, "a,b,c\n1,,\n\n4,5,6\n");
  const auto t = read_csv(path);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0], (std::vector<std::string>{"1", "", ""}));
  EXPECT_EQ(t.column("c"), 2u);
  EXPECT_THROW(t.column("z"), IoError);
  write_text_file(path, "a,b\n1\n");
  EXPECT_THROW(read_csv(path), IoError);
}

TEST(Config, DefaultsFromEmptyDocument) {
  const auto c = config_from_json(json::object());
  EXPECT_EQ(c.schedule.steps, 32u);
  EXPECT_EQ(c.policy.tau, 10u);
  EXPECT_EQ(c.policy.keep_percentile, 0.1);
  EXPECT_EQ(c.guidance_list, (std::vector<double>{2.0}));
  EXPECT_EQ(c.solver, Solver::heun);
  EXPECT_EQ(c.scaling, ScoreScaling::sigma_scaled);
  EXPECT_EQ(c.density.k, 5u);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, RoundTrip) {
  const json doc = {{"fractal", {{"depth", 3}, {"seed", 9}}},
                    {"schedule", {{"steps", 12}, {"sigma_max", 40.0}}},
                    {"solver", "euler"},
                    {"guidance", {1.0, 3.5}},
                    {"scaling", "raw"},
                    {"num_samples", 64},
                    {"policy", {{"tau", 4}, {"keep", 0.25}}},
                    {"master_seed", 123},
                    {"threads", 2}};
  const auto c = config_from_json(doc);
  EXPECT_EQ(c.fractal.depth, 3);
  EXPECT_EQ(c.fractal.seed, 9u);
  EXPECT_EQ(c.solver, Solver::euler);
  EXPECT_EQ(c.scaling, ScoreScaling::raw_score);
  EXPECT_EQ(c.guidance_list, (std::vector<double>{1.0, 3.5}));
  EXPECT_EQ(c.policy.tau, 4u);
  const auto again = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(again), config_to_json(c));
}

TEST(Config, FieldLevelErrors) {
  EXPECT_EQ(config_error({{"polcy", {{"tau", 3}}}}), "polcy: unknown field");
  EXPECT_EQ(config_error({{"policy", {{"taus", 3}}}}), "policy.taus: unknown field");
  EXPECT_EQ(config_error({{"policy", {{"tau", "ten"}}}}), "policy.tau: wrong type");
  EXPECT_EQ(config_error({{"policy", {{"tau", 32}}}}),
            "policy.tau: must satisfy 1 <= tau <= steps - 1");
  EXPECT_EQ(config_error({{"policy", {{"keep", 0.0}}}}), "policy.keep: must lie in (0, 1]");
  EXPECT_EQ(config_error({{"solver", "rk4"}}), "solver: expected 'euler' or 'heun', got 'rk4'");
  EXPECT_EQ(config_error({{"guidance", json::array()}}), "guidance: must list at least one value");
  EXPECT_EQ(config_error({{"num_samples", 0}}), "num_samples: must be >= 1");
  EXPECT_EQ(config_error({{"schedule", {{"sigma_min", 0.0}}}}), "schedule.sigma_min: must be > 0");
  EXPECT_NE(config_error({{"fractal", {{"branch_scale_decay", 1.5}}}}).find(
                "fractal.branch_scale_decay"),
            std::string::npos);
}

TEST(Config, EnumNames) {
  EXPECT_EQ(parse_solver(to_string(Solver::euler)), Solver::euler);
  EXPECT_EQ(parse_scaling(to_string(ScoreScaling::raw_score)), ScoreScaling::raw_score);
  EXPECT_THROW(parse_scaling("log"), ConfigError);
}
