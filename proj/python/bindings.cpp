#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cfgreject/analysis.hpp"
#include "cfgreject/config.hpp"
#include "cfgreject/density.hpp"
#include "cfgreject/experiment.hpp"
#include "cfgreject/io.hpp"
#include "cfgreject/rejection.hpp"

namespace py = pybind11;
using namespace cfgreject;

namespace {

using Point = std::pair<double, double>;

std::vector<Vec2> to_points(const std::vector<Point>& xs) {
  std::vector<Vec2> out;
  out.reserve(xs.size());
  for (const auto& [x, y] : xs) out.push_back({x, y});
  return out;
}

Point to_pair(const Vec2& v) { return {v.x, v.y}; }

py::dict trajectory_dict(const Trajectory& t) {
  py::dict d;
  d["label"] = t.label;
  d["seed"] = t.seed;
  d["final"] = to_pair(t.current());
  d["g"] = std::vector<double>(t.ledger.g_values().begin(), t.ledger.g_values().end());
  d["steps_completed"] = t.steps_completed;
  d["nfe"] = t.nfe;
  d["terminated_early"] = t.terminated_early;
  d["finished"] = t.finished();
  return d;
}

AsdLedger ledger_from(const std::vector<double>& g, std::optional<std::size_t> total) {
  AsdLedger l(total.value_or(g.size()));
  for (double v : g) l.record(v);
  return l;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Accumulated score differences and CFG-Rejection on a 2D fractal mixture";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::enum_<Solver>(m, "Solver").value("euler", Solver::euler).value("heun", Solver::heun);
  py::enum_<ScoreScaling>(m, "ScoreScaling")
      .value("raw", ScoreScaling::raw_score)
      .value("sigma", ScoreScaling::sigma_scaled);
  py::enum_<FilterMode>(m, "FilterMode")
      .value("two_pass", FilterMode::two_pass)
      .value("streaming", FilterMode::streaming);

  py::class_<FractalConfig>(m, "FractalConfig")
      .def(py::init<>())
      .def_readwrite("depth", &FractalConfig::depth)
      .def_readwrite("components_per_branch", &FractalConfig::components_per_branch)
      .def_readwrite("trunk_length", &FractalConfig::trunk_length)
      .def_readwrite("branch_scale_decay", &FractalConfig::branch_scale_decay)
      .def_readwrite("weight_decay", &FractalConfig::weight_decay)
      .def_readwrite("branch_angle", &FractalConfig::branch_angle)
      .def_readwrite("anisotropy_ratio", &FractalConfig::anisotropy_ratio)
      .def_readwrite("component_spread", &FractalConfig::component_spread)
      .def_readwrite("jitter", &FractalConfig::jitter)
      .def_readwrite("seed", &FractalConfig::seed);

  py::class_<MixtureDistribution>(m, "MixtureDistribution")
      .def_property_readonly("num_classes", &MixtureDistribution::num_classes)
      .def_property_readonly("num_components", &MixtureDistribution::num_components)
      .def_property_readonly("priors", &MixtureDistribution::priors)
      .def_property_readonly("labels",
                             [](const MixtureDistribution& d) {
                               std::vector<ClassLabel> out;
                               for (const auto& c : d.classes()) out.push_back(c.label);
                               return out;
                             })
      .def("to_json", [](const MixtureDistribution& d) { return mixture_to_json(d).dump(); })
      .def_static("from_json", [](const std::string& text) {
        return mixture_from_json(nlohmann::json::parse(text));
      });

  m.def("build_fractal_mixture", &build_fractal_mixture, py::arg("config") = FractalConfig{},
        py::arg("num_classes") = 2);
  m.def(
      "log_density",
      [](const MixtureDistribution& d, Point x, double sigma, std::optional<ClassLabel> label) {
        return noisy_log_density(d, {x.first, x.second}, sigma, label);
      },
      py::arg("dist"), py::arg("x"), py::arg("sigma") = 0.0, py::arg("label") = py::none());
  m.def(
      "score",
      [](const MixtureDistribution& d, Point x, double sigma, std::optional<ClassLabel> label) {
        return to_pair(noisy_score(d, {x.first, x.second}, sigma, label));
      },
      py::arg("dist"), py::arg("x"), py::arg("sigma"), py::arg("label") = py::none());
  m.def(
      "sample_data",
      [](const MixtureDistribution& d, ClassLabel label, std::size_t n, std::uint64_t seed) {
        std::vector<Point> out;
        for (const auto& p : sample_data(d, label, n, seed)) out.push_back(to_pair(p));
        return out;
      },
      py::arg("dist"), py::arg("label"), py::arg("n"), py::arg("seed"));

  m.def(
      "make_schedule",
      [](std::size_t steps, double sigma_min, double sigma_max, double rho) {
        return make_schedule(steps, sigma_min, sigma_max, rho).sigmas;
      },
      py::arg("steps") = 32, py::arg("sigma_min") = 0.002, py::arg("sigma_max") = 80.0,
      py::arg("rho") = 7.0);

  py::class_<Sampler>(m, "Sampler")
      .def(py::init([](const MixtureDistribution& d, std::size_t steps, double omega,
                       Solver solver, ScoreScaling scaling, double sigma_min, double sigma_max,
                       double rho) {
             return Sampler(d, make_schedule(steps, sigma_min, sigma_max, rho), {omega, scaling},
                            solver);
           }),
           py::arg("dist"), py::arg("steps") = 32, py::arg("omega") = 2.0,
           py::arg("solver") = Solver::heun, py::arg("scaling") = ScoreScaling::sigma_scaled,
           py::arg("sigma_min") = 0.002, py::arg("sigma_max") = 80.0, py::arg("rho") = 7.0,
           py::keep_alive<1, 2>())
      .def_property_readonly("sigmas", [](const Sampler& s) { return s.schedule().sigmas; })
      .def_property_readonly("full_nfe",
                             [](const Sampler& s) { return full_nfe(s.schedule(), s.solver()); })
      .def(
          "sample",
          [](const Sampler& s, ClassLabel label, std::uint64_t seed) {
            return trajectory_dict(s.sample(label, seed));
          },
          py::arg("label"), py::arg("seed"))
      .def(
          "sample_batch",
          [](const Sampler& s, ClassLabel label, std::size_t count, std::uint64_t master_seed,
             std::size_t threads) {
            std::vector<Trajectory> runs;
            {
              py::gil_scoped_release release;
              runs = s.sample_batch(make_candidates(label, count, master_seed), threads);
            }
            py::list out;
            for (const auto& t : runs) out.append(trajectory_dict(t));
            return out;
          },
          py::arg("label"), py::arg("count"), py::arg("master_seed"), py::arg("threads") = 0)
      .def(
          "filter",
          [](const Sampler& s, ClassLabel label, std::size_t count, std::uint64_t master_seed,
             std::size_t tau, double keep, FilterMode mode, std::optional<double> gamma,
             std::size_t threads) {
            FilterResult r;
            {
              py::gil_scoped_release release;
              r = filter_batch(s, make_candidates(label, count, master_seed), {tau, keep}, mode,
                               gamma, threads);
            }
            py::dict d;
            d["accepted"] = r.accepted;
            d["rejected"] = r.rejected;
            d["gamma"] = r.gamma;
            d["partial_asds"] = r.partial_asds;
            d["total_nfe"] = r.nfe.total_nfe;
            d["full_batch_nfe"] = r.nfe.full_batch_nfe;
            d["nfe_saved_fraction"] = r.nfe.saved_fraction;
            d["predicted_nfe_saved_fraction"] = r.nfe.predicted_saved_fraction;
            return d;
          },
          py::arg("label"), py::arg("count"), py::arg("master_seed"), py::arg("tau") = 10,
          py::arg("keep") = 0.1, py::arg("mode") = FilterMode::two_pass,
          py::arg("gamma") = py::none(), py::arg("threads") = 0);

  m.def(
      "full_asd", [](const std::vector<double>& g) { return full_asd(ledger_from(g, {})); },
      py::arg("g"));
  m.def(
      "partial_asd",
      [](const std::vector<double>& g, std::size_t tau) {
        return partial_asd(ledger_from(g, std::max(g.size(), tau + 1)), tau);
      },
      py::arg("g"), py::arg("tau"));
  m.def(
      "resolve_threshold",
      [](const std::vector<double>& v, double keep) { return resolve_threshold(v, keep); },
      py::arg("partial_asds"), py::arg("keep"));

  m.def(
      "avg_knn_scores",
      [](const std::vector<Point>& pts, std::size_t k) {
        return avg_knn_scores(to_points(pts), k);
      },
      py::arg("points"), py::arg("k") = 5);
  m.def(
      "lof_scores",
      [](const std::vector<Point>& pts, std::size_t k) { return lof_scores(to_points(pts), k); },
      py::arg("points"), py::arg("k") = 5);
  m.def(
      "spearman",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return correlation(a, b, CorrelationMethod::spearman);
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "pearson",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return correlation(a, b, CorrelationMethod::pearson);
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "normalize_config",
      [](const std::string& text) {
        auto c = config_from_json(nlohmann::json::parse(text));
        c.validate();
        return config_to_json(c).dump();
      },
      py::arg("config_json"));
  m.def(
      "run_experiment",
      [](const std::string& text) {
        auto c = config_from_json(nlohmann::json::parse(text));
        c.validate();
        py::gil_scoped_release release;
        run_experiment(c);
      },
      py::arg("config_json"));
}
