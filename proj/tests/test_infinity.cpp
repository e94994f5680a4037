#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "optdesign/infinity.hpp"

using namespace optdesign;

namespace {

struct AnnulusCase {
  Grid grid;
  DirichletProblem problem;
};

// Annulus 0.25 < |x| < 1 with data 1 inside the hole and 0 outside. The exact
// solution is the cone (1 - |x|) / 0.75.
AnnulusCase annulus_case(int resolution) {
  const Raster r = rasterize(DomainSpec::annulus(0.25, 1.0), resolution);
  ScalarField data(r.grid);
  for (std::size_t k = 0; k < r.grid.size(); ++k) {
    const Point x = r.grid.center(k);
    data[k] = std::hypot(x.x, x.y) < 0.25 ? 1.0 : 0.0;
  }
  return {r.grid, {r.mask, data}};
}

double cone(Point x) { return (1.0 - std::hypot(x.x, x.y)) / 0.75; }

// Worst ratio of |u - cone| to the pointwise bound 3(h + h/r max f).
double worst_cone_ratio(const AnnulusCase& c, const ScalarField& u) {
  double worst = 0.0;
  const double h = c.grid.h;
  for (std::size_t k = 0; k < c.grid.size(); ++k) {
    if (!c.problem.region[k]) continue;
    const Point x = c.grid.center(k);
    const double r = std::hypot(x.x, x.y);
    worst = std::max(worst, std::abs(u[k] - cone(x)) / (3.0 * (h + h / r * 1.0)));
  }
  return worst;
}

double sup_cone_error(const AnnulusCase& c, const ScalarField& u) {
  double worst = 0.0;
  for (std::size_t k = 0; k < c.grid.size(); ++k)
    if (c.problem.region[k]) worst = std::max(worst, std::abs(u[k] - cone(c.grid.center(k))));
  return worst;
}

DirichletProblem random_disk_problem(std::mt19937& rng, int resolution) {
  const Raster r = rasterize(DomainSpec::disk(1.0), resolution);
  std::uniform_real_distribution<double> U(-1.0, 2.0);
  ScalarField data(r.grid);
  for (double& v : data.values()) v = U(rng);
  return {r.mask, data};
}

}  // namespace

TEST(InfinityHarmonic, LinearDataIsReproduced) {
  const Raster r = rasterize(DomainSpec::rectangle(1.0, 0.6), 40);
  ScalarField data(r.grid);
  for (std::size_t k = 0; k < r.grid.size(); ++k) data[k] = 2.0 * r.grid.center(k).x - 0.5 * r.grid.center(k).y;
  InfinitySolverOptions opts;
  opts.tol = 1e-13;
  const auto res = solve_infinity_harmonic({r.mask, data}, opts);
  for (std::size_t k = 0; k < r.grid.size(); ++k) EXPECT_NEAR(res.field[k], data[k], 1e-10);
  const ResidualField rf = infinity_residual(res.field, r.mask);
  EXPECT_LT(rf.max_abs(), 1e-4);
}

TEST(InfinityHarmonic, AnnulusCone) {
  const AnnulusCase c = annulus_case(128);
  const auto res = solve_infinity_harmonic(c.problem);
  EXPECT_LE(worst_cone_ratio(c, res.field), 1.0);
}

TEST(InfinityHarmonic, RefinementReducesConeError) {
  // Radius fixed at 3 cells, so h/r stays constant.
  const AnnulusCase coarse = annulus_case(32);
  const AnnulusCase fine = annulus_case(64);
  const double e_coarse = sup_cone_error(coarse, solve_infinity_harmonic(coarse.problem).field);
  const double e_fine = sup_cone_error(fine, solve_infinity_harmonic(fine.problem).field);
  EXPECT_LT(e_fine, e_coarse);
}

TEST(InfinityHarmonic, ConstantDataGivesConstant) {
  const Raster r = rasterize(DomainSpec::disk(1.0), 24);
  const auto res = solve_infinity_harmonic({r.mask, ScalarField(r.grid, 0.7)});
  for (std::size_t k = 0; k < r.grid.size(); ++k) EXPECT_EQ(res.field[k], 0.7);
}

TEST(InfinityHarmonic, RejectsBadInput) {
  const Raster r = rasterize(DomainSpec::disk(1.0), 24);
  const ScalarField data(r.grid, 1.0);
  InfinitySolverOptions small;
  small.stencil_radius = 1.5 * r.grid.h;
  EXPECT_THROW(solve_infinity_harmonic({r.mask, data}, small), InvalidInput);
  EXPECT_THROW(solve_infinity_harmonic({RegionMask(r.grid), data}), InvalidInput);
  EXPECT_THROW(solve_infinity_harmonic({RegionMask(r.grid, true), data}), InvalidInput);
}

TEST(InfinityHarmonic, NonConvergenceIsReported) {
  const AnnulusCase c = annulus_case(32);
  InfinitySolverOptions opts;
  opts.max_iters = 3;
  try {
    solve_infinity_harmonic(c.problem, opts);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("last change"), std::string::npos);
  }
}

TEST(InfinityHarmonic, OutputWithinDataRange) {
  std::mt19937 rng(2718);
  for (int t = 0; t < 5; ++t) {
    const DirichletProblem prob = random_disk_problem(rng, 20);
    const RegionMask ring = outer_ring(prob.region, 1);
    double lo = 1e300, hi = -1e300;
    for (std::size_t k = 0; k < ring.size(); ++k)
      if (ring[k]) {
        lo = std::min(lo, prob.data[k]);
        hi = std::max(hi, prob.data[k]);
      }
    const auto res = solve_infinity_harmonic(prob);
    for (std::size_t k = 0; k < prob.region.size(); ++k) {
      if (!prob.region[k]) continue;
      EXPECT_GE(res.field[k], lo - 1e-12);
      EXPECT_LE(res.field[k], hi + 1e-12);
    }
  }
}

TEST(InfinityHarmonic, ComparisonPrinciple) {
  std::mt19937 rng(1618);
  std::uniform_real_distribution<double> U(0.0, 0.5);
  for (int t = 0; t < 5; ++t) {
    const DirichletProblem b = random_disk_problem(rng, 20);
    DirichletProblem a = b;
    for (double& v : a.data.values()) v += U(rng);
    InfinitySolverOptions opts;
    opts.tol = 1e-12;
    const auto ua = solve_infinity_harmonic(a, opts);
    const auto ub = solve_infinity_harmonic(b, opts);
    for (std::size_t k = 0; k < b.region.size(); ++k)
      if (b.region[k]) EXPECT_GE(ua.field[k], ub.field[k] - 1e-10);
  }
}

TEST(InfinityHarmonic, SweepChangeIsNonIncreasing) {
  std::mt19937 rng(5);
  for (int t = 0; t < 3; ++t) {
    const auto res = solve_infinity_harmonic(random_disk_problem(rng, 24));
    ASSERT_GE(res.changes.size(), 3u);
    EXPECT_EQ(res.changes.back(), res.last_change);
    // The first sweep moves away from the constant initial guess.
    for (std::size_t s = 2; s < res.changes.size(); ++s)
      EXPECT_LE(res.changes[s], res.changes[s - 1] * (1 + 1e-9) + 1e-15) << "sweep " << s;
  }
}

TEST(InfinityHarmonic, Deterministic) {
  std::mt19937 rng(11);
  const DirichletProblem prob = random_disk_problem(rng, 24);
  EXPECT_EQ(solve_infinity_harmonic(prob).field, solve_infinity_harmonic(prob).field);
}

TEST(InfinityResidual, LinearFieldIsZero) {
  const Grid g({0, 0}, 0.05, 20, 20);
  ScalarField u(g);
  for (std::size_t k = 0; k < g.size(); ++k) u[k] = 3.0 * g.center(k).x + g.center(k).y;
  const ResidualField rf = infinity_residual(u, RegionMask(g, true));
  EXPECT_LT(rf.max_abs(), 1e-9);
  EXPECT_GT(rf.excluded, 0u);
}

TEST(InfinityResidual, ConeResidualIsFirstOrder) {
  auto worst = [](int n) {
    const double h = 2.0 / n;
    const Grid g({-1, -1}, h, n, n);
    ScalarField u(g);
    RegionMask away(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Point x = g.center(k);
      u[k] = std::hypot(x.x - 0.013, x.y + 0.007);
      away.set(k, u[k] > 0.3);
    }
    return infinity_residual(u, away).max_abs();
  };
  const double coarse = worst(64), fine = worst(128);
  EXPECT_LT(fine, 0.6 * coarse);
  EXPECT_LT(fine, 1.0);
}

TEST(InfinityResidual, ParabolaIsNonzero) {
  const Grid g({-1, -1}, 0.05, 40, 40);
  ScalarField u(g);
  for (std::size_t k = 0; k < g.size(); ++k) u[k] = g.center(k).x * g.center(k).x;
  const ResidualField rf = infinity_residual(u, RegionMask(g, true));
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!rf.evaluated[k]) continue;
    const double x = g.center(k).x;
    EXPECT_NEAR(rf.values[k], 2.0 * (2.0 * x) * (2.0 * x), 1e-9);
  }
}

TEST(LipschitzExtension, AgreesWithDataAndSlope) {
  const auto bd = sample_boundary(DomainSpec::rectangle(1, 1), BoundaryFunction::linear(1.0, 1.0, 0.0), 256);
  const Raster r = rasterize(DomainSpec::rectangle(1, 1), 32);
  const ScalarField e = lipschitz_extension(bd, 2.0, r.grid);
  for (std::size_t k = 0; k < r.grid.size(); ++k) {
    const Point x = r.grid.center(k);
    double best = 0.0;
    for (const auto& s : bd.samples) best = std::max(best, s.value - 2.0 * distance(x, s.point));
    EXPECT_DOUBLE_EQ(e[k], best);
  }
}

TEST(BoundaryLayerProblem, LayerHoldsData) {
  const Raster r = rasterize(DomainSpec::rectangle(1, 1), 16);
  const ScalarField values(r.grid, 2.0);
  const DirichletProblem p = make_boundary_layer_problem(r.mask, r.mask, values);
  const RegionMask layer = inner_boundary(r.mask);
  for (std::size_t k = 0; k < r.grid.size(); ++k) {
    EXPECT_EQ(p.region[k], r.mask[k] && !layer[k]);
    if (!p.region[k]) EXPECT_EQ(p.data[k], 2.0);
  }
}
