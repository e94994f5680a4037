#include <gtest/gtest.h>

#include <cmath>

#include "optdesign/experiments.hpp"

using namespace optdesign;

namespace {

ProblemSpec square_spec() { return {DomainSpec::rectangle(1, 1), BoundaryFunction::constant(1.0), 0.75}; }

ProblemSpec bump_spec() {
  return {DomainSpec::rectangle(1, 1), BoundaryFunction::bump(0.1, 0.9, {0.5, 0.0}, 0.2), 0.75};
}

const SweepOutput& small_sweep() {
  static const SweepOutput out = run_p_sweep(square_spec(), {16, 8}, 40);
  return out;
}

}  // namespace

TEST(Report, JsonRoundTrip) {
  ExperimentReport r = small_sweep().report;
  SweepRow failed;
  failed.p = 128;
  failed.failed = true;
  failed.error = "no convergence";
  r.rows.push_back(failed);
  const Json j = to_json(r);
  EXPECT_EQ(report_from_json(j), r);
  EXPECT_EQ(to_json(report_from_json(j)).dump(), j.dump());
  EXPECT_FALSE(j["rows"].back().contains("energy_root"));
}

TEST(Sweep, RowsSortedAndFeasible) {
  const auto& out = small_sweep();
  const double h = out.report.metadata.h;
  ASSERT_EQ(out.report.rows.size(), 2u);
  EXPECT_EQ(out.report.rows[0].p, 8.0);
  EXPECT_EQ(out.report.rows[1].p, 16.0);
  for (const auto& row : out.report.rows) {
    EXPECT_FALSE(row.failed) << row.error;
    EXPECT_LE(row.volume, 0.75 + 4 * h);
    EXPECT_GT(row.lambda_p_estimate, 0.0);
    EXPECT_GE(row.L_used, row.p);
  }
  ASSERT_EQ(out.fields.size(), 2u);
  EXPECT_TRUE(out.fields[0] && out.fields[1]);
  EXPECT_TRUE(out.report.limit.condition_H);
  EXPECT_NEAR(out.report.limit.lambda, 4.0, 0.08);
}

TEST(Sweep, ErrorDecreasesWithP) {
  const auto& rows = small_sweep().report.rows;
  EXPECT_LT(rows[1].sup_norm_error_vs_psi, rows[0].sup_norm_error_vs_psi);
}

TEST(Sweep, Deterministic) {
  const SweepOutput again = run_p_sweep(square_spec(), {8, 16}, 40);
  EXPECT_EQ(to_json(again.report).dump(), to_json(small_sweep().report).dump());
}

TEST(Sweep, FailedRowsAreRecorded) {
  SweepOptions opts;
  opts.solver.L_max = 8.0;
  opts.solver.volume_tolerance = 1e-6;
  const SweepOutput out = run_p_sweep({DomainSpec::rectangle(1, 1), BoundaryFunction::constant(1.0), 0.3}, {8}, 32, opts);
  ASSERT_EQ(out.report.rows.size(), 1u);
  EXPECT_TRUE(out.report.rows[0].failed);
  EXPECT_FALSE(out.report.rows[0].error.empty());
  EXPECT_FALSE(out.fields[0].has_value());
}

TEST(Sweep, RejectsBadPList) {
  EXPECT_THROW(run_p_sweep(square_spec(), {}, 32), InvalidInput);
  EXPECT_THROW(run_p_sweep(square_spec(), {8, 8}, 32), InvalidInput);
}

TEST(Multiplicity, BumpInstance) {
  const MultiplicityOutput out = run_multiplicity(bump_spec(), 64, 0.05);
  const auto& r = out.report;
  EXPECT_LT(r.measure_D_delta, r.alpha);
  EXPECT_GT(r.measure_D_delta, r.measure_D);
  EXPECT_GE(r.min_v_minus_psi, -r.theta_pos);
  EXPECT_GT(r.sup_v_minus_psi, r.theta_pos);
  EXPECT_NEAR(r.lip_psi, r.lip_f, 0.1 * r.lip_f);
  EXPECT_NEAR(r.lip_v, r.lip_f, 0.1 * r.lip_f);
}

TEST(Multiplicity, RejectsCompatibleInstance) {
  EXPECT_THROW(run_multiplicity(square_spec(), 32, 0.05), InvalidInput);
  EXPECT_THROW(run_multiplicity(bump_spec(), 32, 0.0), InvalidInput);
}

TEST(EnergyEquivalence, RejectsCompatibleInstance) {
  EXPECT_THROW(run_energy_equivalence(square_spec(), {8}, 32), InvalidInput);
  EXPECT_THROW(run_energy_equivalence(bump_spec(), {}, 32), InvalidInput);
}

TEST(EnergyEquivalence, SmallBudgetIsNoCheaper) {
  const EnergyEquivalenceReport r = run_energy_equivalence(bump_spec(), {8}, 40);
  EXPECT_LT(r.beta, r.alpha);
  ASSERT_EQ(r.rows.size(), 1u);
  const auto& row = r.rows[0];
  EXPECT_TRUE(std::isfinite(row.energy_alpha));
  EXPECT_DOUBLE_EQ(row.gap, std::abs(row.energy_alpha - row.energy_beta));
  // A smaller budget cannot lower the minimal energy; allow solver slack.
  EXPECT_GE(row.energy_beta, row.energy_alpha * (1 - 0.02));
}

TEST(SupDistance, Example) {
  const Grid g({0, 0}, 0.1, 10, 10);
  RegionMask m(g);
  m.set(3, 3, true);
  ScalarField a(g, 0.0), b(g, 0.0);
  a.at(3, 3) = 2.0;
  b.at(5, 5) = 9.0;
  EXPECT_EQ(sup_distance(a, b, m), 2.0);
}
