#include <gtest/gtest.h>

#include <sstream>

#include "sal/harness/compare.hpp"

using namespace sal;

namespace {

RunArtifact fake(const std::string& task_text, std::vector<double> acc, const std::string& basin = "") {
  std::istringstream in(task_text);
  RunArtifact a;
  a.config = parse_run_config(in);
  int epoch = 0;
  for (double x : acc) {
    EpochRow r;
    r.epoch = ++epoch;
    r.accuracy = x;
    r.loss = 1.0 - x;
    a.rows.push_back(r);
  }
  a.final_basin = basin;
  return a;
}

const char* kMoons = "[task]\nkind = two_moons\nn = 100\n";
const char* kWell = "[task]\nkind = landscape\nlandscape = double_well\ninit_basin = sharp\n";

}  // namespace

TEST(Compare, IdenticalRunsHaveZeroGaps) {
  const auto a = fake(kMoons, {0.5, 0.7, 0.9});
  const auto rep = compare_runs(a, a);
  for (const auto& r : rep.rows) EXPECT_EQ(r.accuracy_gap, 0.0);
  EXPECT_EQ(rep.final_loss_delta, 0.0);
  EXPECT_FALSE(rep.final_trace_delta);
}

TEST(Compare, GapIsSalMinusBaseline) {
  auto a = fake(kMoons, {0.5, 0.6});
  auto b = fake(kMoons, {0.5, 0.75});
  a.final_trace = 10.0;
  b.final_trace = 4.0;
  b.events.push_back({17, InterventionKind::Noise, 0.1, {"w"}, 0.02, 0.02});
  const auto rep = compare_runs(a, b);
  EXPECT_DOUBLE_EQ(rep.rows[1].accuracy_gap, 0.15);
  EXPECT_DOUBLE_EQ(*rep.final_trace_delta, -6.0);
  EXPECT_EQ(rep.sal_events.noise, 1);
  EXPECT_EQ(rep.baseline_events.noise, 0);
  const auto csv = comparison_csv(rep);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,baseline_accuracy,sal_accuracy,accuracy_gap,baseline_loss,sal_loss");
  EXPECT_NE(comparison_text(rep).find("interventions sal: noise 1, plastic 0, revert 0"), std::string::npos);
}

TEST(Compare, EpochMismatchIsError) {
  EXPECT_THROW(compare_runs(fake(kMoons, {0.5, 0.6}), fake(kMoons, {0.5})), ConfigError);
}

TEST(Compare, TaskMismatchIsError) {
  EXPECT_THROW(compare_runs(fake(kMoons, {0.5}), fake(kWell, {0.5})), ConfigError);
  EXPECT_THROW(compare_runs(fake(kMoons, {0.5}), fake("[task]\nkind = two_moons\nn = 102\n", {0.5})),
               ConfigError);
}

TEST(Ensemble, EscapeRateCountsOtherBasinOnly) {
  std::vector<RunArtifact> base{fake(kWell, {0, 0}, "sharp"), fake(kWell, {0, 0}, "sharp")};
  std::vector<RunArtifact> sal{fake(kWell, {0, 0}, "flat"), fake(kWell, {0, 0}, "none"),
                               fake(kWell, {0, 0}, "flat"), fake(kWell, {0, 0}, "sharp")};
  const auto rep = compare_ensembles(base, sal);
  EXPECT_EQ(*rep.baseline.escape_rate, 0.0);
  EXPECT_EQ(*rep.sal.escape_rate, 0.5);
  EXPECT_EQ(rep.sal.runs, 4U);
}

TEST(Ensemble, MeanAccuracyGap) {
  std::vector<RunArtifact> base{fake(kMoons, {0.4, 0.6}), fake(kMoons, {0.6, 0.8})};
  std::vector<RunArtifact> sal{fake(kMoons, {0.5, 0.9})};
  const auto rep = compare_ensembles(base, sal);
  EXPECT_DOUBLE_EQ(rep.mean_accuracy_gap[0], 0.0);
  EXPECT_DOUBLE_EQ(rep.mean_accuracy_gap[1], 0.2);
  EXPECT_FALSE(rep.sal.escape_rate);
  EXPECT_THROW(compare_ensembles(base, {}), ConfigError);
}

TEST(Ensemble, RunDirsInMissingIsIoError) {
  EXPECT_THROW(run_dirs_in("/nonexistent/sweep"), IoError);
}
