#include "cfgreject/records.hpp"

#include <charconv>
#include <map>

#include "cfgreject/density.hpp"

namespace cfgreject {

std::string to_string(DensityEstimator estimator) {
  return estimator == DensityEstimator::avg_knn ? "avg_knn" : "lof";
}

std::vector<SampleRecord> make_records(std::span<const Trajectory> trajectories, std::size_t tau,
                                       std::size_t first_index) {
  std::vector<SampleRecord> out;
  out.reserve(trajectories.size());
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const Trajectory& t = trajectories[i];
    SampleRecord r;
    r.index = first_index + i;
    r.label = t.label;
    r.seed = t.seed;
    if (t.finished()) {
      r.asd_full = full_asd(t.ledger);
      r.position = t.current();
    }
    if (t.ledger.size() >= tau + 1) r.asd_partial = partial_asd(t.ledger, tau);
    r.terminated_early = t.terminated_early;
    r.steps_completed = t.steps_completed;
    r.nfe = t.nfe;
    out.push_back(r);
  }
  return out;
}

void score_records(const MixtureDistribution& dist, std::vector<SampleRecord>& records,
                   std::size_t k, std::size_t threads) {
  const NoisyMixture clean(dist, 0.0);
  std::map<ClassLabel, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    r.true_log_density.reset();
    r.avg_knn.reset();
    r.lof.reset();
    if (!r.finished()) continue;
    r.true_log_density = clean.conditional(*r.position, dist.class_index(r.label)).log_density;
    by_class[r.label].push_back(i);
  }
  for (const auto& [label, members] : by_class) {
    if (members.size() <= k) continue;
    std::vector<Vec2> pts;
    pts.reserve(members.size());
    for (std::size_t i : members) pts.push_back(*records[i].position);
    const auto knn = avg_knn_scores(pts, k, threads);
    const auto lof = lof_scores(pts, k, threads);
    for (std::size_t j = 0; j < members.size(); ++j) {
      records[members[j]].avg_knn = knn[j];
      records[members[j]].lof = lof[j];
    }
  }
}

std::string samples_to_csv(std::span<const SampleRecord> records) {
  std::string out = kSamplesHeader;
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.index) + ',' + std::to_string(r.label) + ',' + std::to_string(r.seed) +
           ',' + format_optional(r.asd_full) + ',' + format_optional(r.asd_partial) + ',' +
           (r.terminated_early ? "1" : "0") + ',';
    if (r.position) {
      out += format_double(r.position->x) + ',' + format_double(r.position->y) + ',';
    } else {
      out += ",,";
    }
    out += format_optional(r.true_log_density) + ',' + format_optional(r.avg_knn) + ',' +
           format_optional(r.lof) + ',' + std::to_string(r.steps_completed) + ',' +
           std::to_string(r.nfe) + '\n';
  }
  return out;
}

namespace {

template <typename T>
T parse_number(const std::string& cell, const char* column) {
  T value{};
  const char* first = cell.data();
  const char* last = first + cell.size();
  const auto [end, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || end != last) {
    throw IoError(std::string("samples.csv: bad value '") + cell + "' in column " + column);
  }
  return value;
}

std::optional<double> parse_optional(const std::string& cell, const char* column) {
  if (cell.empty()) return std::nullopt;
  return parse_number<double>(cell, column);
}

}  // namespace

std::vector<SampleRecord> samples_from_csv(const CsvTable& table) {
  std::string header;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    header += (i ? "," : "") + table.header[i];
  }
  if (header != kSamplesHeader) throw IoError("samples.csv: unexpected header '" + header + "'");

  std::vector<SampleRecord> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    SampleRecord r;
    r.index = parse_number<std::size_t>(row[0], "index");
    r.label = parse_number<ClassLabel>(row[1], "class");
    r.seed = parse_number<std::uint64_t>(row[2], "seed");
    r.asd_full = parse_optional(row[3], "asd_full");
    r.asd_partial = parse_optional(row[4], "asd_partial");
    r.terminated_early = parse_number<int>(row[5], "terminated_early") != 0;
    const auto x0 = parse_optional(row[6], "x0");
    const auto x1 = parse_optional(row[7], "x1");
    if (x0.has_value() != x1.has_value()) throw IoError("samples.csv: x0/x1 half empty");
    if (x0) r.position = Vec2{*x0, *x1};
    r.true_log_density = parse_optional(row[8], "true_log_density");
    r.avg_knn = parse_optional(row[9], "avg_knn");
    r.lof = parse_optional(row[10], "lof");
    r.steps_completed = parse_number<std::size_t>(row[11], "steps_completed");
    r.nfe = parse_number<std::size_t>(row[12], "nfe");
    out.push_back(r);
  }
  return out;
}

std::string ledgers_to_csv(std::span<const SampleRecord> records,
                           std::span<const Trajectory> trajectories,
                           const NoiseSchedule& schedule) {
  if (records.size() != trajectories.size()) {
    throw std::invalid_argument("ledgers_to_csv: records and trajectories differ in length");
  }
  std::string out = "index,class,step,sigma,g\n";
  const std::size_t T = schedule.steps();
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto g = trajectories[i].ledger.g_values();
    for (std::size_t j = 0; j < g.size(); ++j) {
      // Entry j is recorded at step t = T - j, noise level sigmas[j].
      out += std::to_string(records[i].index) + ',' + std::to_string(records[i].label) + ',' +
             std::to_string(T - j) + ',' + format_double(schedule.sigmas[j]) + ',' +
             format_double(g[j]) + '\n';
    }
  }
  return out;
}

std::string curve_to_csv(const BinnedCurve& curve) {
  std::string out = "bin,asd_lo,asd_hi,count,mean_asd,mean_log_density\n";
  for (std::size_t b = 0; b < curve.bin_counts.size(); ++b) {
    out += std::to_string(b) + ',' + format_double(curve.bin_edges[b]) + ',' +
           format_double(curve.bin_edges[b + 1]) + ',' + std::to_string(curve.bin_counts[b]) + ',';
    if (curve.bin_counts[b] > 0) {
      out += format_double(curve.bin_mean_x[b]) + ',' + format_double(curve.bin_mean_y[b]);
    } else {
      out += ',';
    }
    out += '\n';
  }
  return out;
}

std::string ranks_to_csv(std::span<const RankRow> rows) {
  std::string out = "class,estimator,rank,count,mean_score,mean_log_density,asd_min,asd_max\n";
  for (const auto& r : rows) {
    out += std::to_string(r.label) + ',' + to_string(r.estimator) + ',' +
           std::to_string(r.profile.rank) + ',' + std::to_string(r.profile.indices.size()) + ',' +
           format_double(r.profile.mean_score) + ',' + format_double(r.profile.mean_log_density) +
           ',' + format_double(r.asd_min) + ',' + format_double(r.asd_max) + '\n';
  }
  return out;
}

std::string budget_to_csv(std::span<const std::pair<ClassLabel, BudgetComparison>> budgets) {
  std::string out =
      "class,method,nfe_budget,nfe_used,candidate_count,selected_count,mean_true_log_density,"
      "mean_final_quality_proxy\n";
  for (const auto& [label, cmp] : budgets) {
    for (const BudgetReport* rep : {&cmp.cfg_rejection, &cmp.best_of_n}) {
      out += std::to_string(label) + ',' + to_string(rep->method) + ',' +
             std::to_string(rep->nfe_budget) + ',' + std::to_string(rep->nfe_used) + ',' +
             std::to_string(rep->candidate_count) + ',' + std::to_string(rep->selected_count) +
             ',' + format_double(rep->mean_true_log_density) + ',' +
             format_double(rep->mean_final_quality_proxy) + '\n';
    }
  }
  return out;
}

}  // namespace cfgreject
