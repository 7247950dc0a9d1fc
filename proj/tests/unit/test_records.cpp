#include <gtest/gtest.h>

#include <filesystem>
#include <regex>
#include <sstream>

#include "cfgreject/records.hpp"
#include "cfgreject/rejection.hpp"
#include "cfgreject/svg.hpp"

using namespace cfgreject;

namespace {

struct Batch {
  MixtureDistribution dist = build_fractal_mixture(FractalConfig{}, 2);
  Sampler sampler{dist, make_schedule(10, 0.002, 80.0, 7.0), {2.0}, Solver::heun};
  FilterResult result =
      filter_batch(sampler, make_candidates(1, 24, 3), {3, 0.25}, FilterMode::two_pass);
};

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(Records, FromFilteredBatch) {
  const Batch b;
  auto records = make_records(b.result.trajectories, 3, 100);
  ASSERT_EQ(records.size(), 24u);
  EXPECT_EQ(records[0].index, 100u);
  std::size_t finished = 0;
  for (const auto& r : records) {
    EXPECT_TRUE(r.asd_partial.has_value());
    EXPECT_EQ(r.finished(), r.asd_full.has_value());
    EXPECT_EQ(r.finished(), !r.terminated_early);
    finished += r.finished();
  }
  EXPECT_EQ(finished, b.result.accepted.size());

  score_records(b.dist, records, 5);
  for (const auto& r : records) {
    EXPECT_EQ(r.true_log_density.has_value(), r.finished());
    EXPECT_EQ(r.avg_knn.has_value(), r.finished());
  }
  // Six finished samples leave room for k = 5 but not for k = 6.
  score_records(b.dist, records, 6);
  for (const auto& r : records) EXPECT_FALSE(r.avg_knn.has_value());
}

TEST(Records, CsvRoundTrip) {
  const Batch b;
  auto records = make_records(b.result.trajectories, 3);
  score_records(b.dist, records, 2);
  const std::string csv = samples_to_csv(records);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kSamplesHeader);

  const auto path = std::filesystem::temp_directory_path() / "cfgreject_unit_samples.csv";
  write_text_file(path, csv);
  EXPECT_EQ(samples_from_csv(read_csv(path)), records);

  const auto rejected = b.result.rejected.front();
  const std::regex early_row("^" + std::to_string(rejected) + ",1,[0-9]+,,[^,]+,1,,,,,,4,16$");
  bool seen = false;
  std::istringstream lines(csv);
  for (std::string line; std::getline(lines, line);) seen |= std::regex_match(line, early_row);
  EXPECT_TRUE(seen);
}

TEST(Records, CsvRejectsBadInput) {
  const auto path = std::filesystem::temp_directory_path() / "cfgreject_unit_bad.csv";
  write_text_file(path, "index,class\n1,2\n");
  EXPECT_THROW(samples_from_csv(read_csv(path)), IoError);
  write_text_file(path, std::string(kSamplesHeader) + "\n0,0,1,x,,0,,,,,,1,4\n");
  EXPECT_THROW(samples_from_csv(read_csv(path)), IoError);
}

TEST(Records, LedgerTable) {
  const Batch b;
  const auto records = make_records(b.result.trajectories, 3);
  const std::string csv = ledgers_to_csv(records, b.result.trajectories, b.sampler.schedule());
  std::size_t entries = 0;
  for (const auto& t : b.result.trajectories) entries += t.ledger.size();
  EXPECT_EQ(count(csv, "\n"), entries + 1);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "index,class,step,sigma,g");
  EXPECT_NE(csv.find("\n0,1,10,80,"), std::string::npos);
}

TEST(Svg, ScatterIsSelfContained) {
  const std::vector<Vec2> pts{{0, 0}, {1, 2}, {-1, 0.5}};
  const std::vector<double> vals{0.5, 2.0, 8.0};
  const std::string svg = scatter_svg(pts, vals, "a < b & c");
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("xmlns=\"http://www.w3.org/2000/svg\""), std::string::npos);
  EXPECT_EQ(count(svg, "<circle"), 3u);
  EXPECT_NE(svg.find("a &lt; b &amp; c"), std::string::npos);
  EXPECT_EQ(svg.find("href"), std::string::npos);
  EXPECT_EQ(svg.find("nan"), std::string::npos);
}

TEST(Svg, CurveHandlesDegenerateInput) {
  const std::vector<double> one{1.0};
  const std::string single = curve_svg(one, one, std::nullopt, "t", "x", "y");
  EXPECT_EQ(count(single, "<circle"), 1u);
  EXPECT_EQ(single.find("nan"), std::string::npos);
  const std::string empty = curve_svg({}, {}, FitLine{1.0, 0.0}, "t", "x", "y");
  EXPECT_EQ(count(empty, "<circle"), 0u);
  const std::vector<double> xs{0, 1, 2}, ys{1, 3, 5};
  const std::string fitted = curve_svg(xs, ys, FitLine{2.0, 1.0}, "t", "x", "y");
  EXPECT_EQ(count(fitted, "<circle"), 3u);
  const std::string bare = curve_svg(xs, ys, std::nullopt, "t", "x", "y");
  EXPECT_EQ(count(fitted, "<line"), count(bare, "<line") + 1);
}
