#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "optdesign/freeboundary.hpp"
#include "optdesign/limit.hpp"

using namespace optdesign;

namespace {

struct SquarePsi {
  Instance inst;
  LimitSolution lim;
  BoundarySet fb;
  double theta;
};

const SquarePsi& square_psi() {
  static const SquarePsi s = [] {
    Instance inst = discretize({DomainSpec::rectangle(1, 1), BoundaryFunction::constant(1.0), 0.75}, 128);
    LimitSolution lim = solve_limit(inst);
    const double theta = inst.positivity_threshold();
    BoundarySet fb = extract_free_boundary(lim.field, inst.domain, theta);
    return SquarePsi{std::move(inst), std::move(lim), std::move(fb), theta};
  }();
  return s;
}

Grid box(int n) { return Grid({-1, -1}, 2.0 / n, n, n); }

template <class F>
ScalarField sample(const Grid& g, F f) {
  ScalarField u(g);
  for (std::size_t k = 0; k < g.size(); ++k) u[k] = f(g.center(k));
  return u;
}

// Inner boundary cells of the disk of radius r, as a point set.
BoundarySet circle_points(const Grid& g, double r) {
  const ScalarField u = sample(g, [r](Point x) { return std::hypot(x.x, x.y) < r ? 1.0 : 0.0; });
  return extract_free_boundary(u, RegionMask(g, true), 0.5);
}

BoundarySet random_set(std::mt19937& rng) {
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  BoundarySet s;
  const int n = 1 + static_cast<int>(rng() % 12);
  for (int k = 0; k < n; ++k) s.points.push_back({U(rng), U(rng)});
  return s;
}

}  // namespace

TEST(ExtractFreeBoundary, PsiRingOnSquare) {
  const auto& s = square_psi();
  const double h = s.inst.h();
  ASSERT_FALSE(s.fb.empty());
  for (const Point& x : s.fb.points) {
    const double to_edge = std::min({x.x, 1 - x.x, x.y, 1 - x.y});
    EXPECT_NEAR(to_edge, 0.25, h);
  }
}

TEST(ExtractFreeBoundary, PositiveEverywhereHasNone) {
  const Raster r = rasterize(DomainSpec::rectangle(1, 1), 32);
  EXPECT_THROW(extract_free_boundary(ScalarField(r.grid, 1.0), r.mask, 0.01), InvalidInput);
}

TEST(ExtractFreeBoundary, EmptyPositivitySetRejected) {
  const Raster r = rasterize(DomainSpec::rectangle(1, 1), 32);
  EXPECT_THROW(extract_free_boundary(ScalarField(r.grid, 0.0), r.mask, 0.01), InvalidInput);
  EXPECT_THROW(extract_free_boundary(ScalarField(r.grid, 1.0), r.mask, 0.0), InvalidInput);
}

TEST(ExtractFreeBoundary, ConeGivesCircle) {
  const Grid g = box(200);
  const ScalarField u = sample(g, [](Point x) { return std::max(0.0, 1 - 2 * std::hypot(x.x, x.y)); });
  const BoundarySet fb = extract_free_boundary(u, RegionMask(g, true), 1e-9);
  ASSERT_GT(fb.size(), 100u);
  for (const Point& x : fb.points) EXPECT_NEAR(std::hypot(x.x, x.y), 0.5, g.h);
}

TEST(ExtractFreeBoundary, ExcludesDomainBoundary) {
  const auto& s = square_psi();
  const RegionMask ring = inner_boundary(s.inst.domain);
  for (const Point& x : s.fb.points) {
    const auto [i, j] = s.inst.grid.locate(x);
    EXPECT_FALSE(ring.at(i, j));
  }
}

TEST(Hausdorff, Examples) {
  const BoundarySet a{{{0, 0}, {1, 2}, {-3, 0.5}}};
  EXPECT_EQ(hausdorff_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(hausdorff_distance(BoundarySet{{{0, 0}}}, BoundarySet{{{3, 4}}}), 5.0);
  EXPECT_THROW(hausdorff_distance(a, BoundarySet{}), InvalidInput);
}

TEST(Hausdorff, ConcentricCircles) {
  const Grid g = box(256);
  EXPECT_NEAR(hausdorff_distance(circle_points(g, 0.3), circle_points(g, 0.5)), 0.2, 2 * g.h);
}

TEST(Hausdorff, MetricAxiomsOnRandomTriples) {
  std::mt19937 rng(31415);
  for (int t = 0; t < 200; ++t) {
    const BoundarySet a = random_set(rng), b = random_set(rng), c = random_set(rng);
    const double ab = hausdorff_distance(a, b), ba = hausdorff_distance(b, a);
    EXPECT_EQ(ab, ba);
    EXPECT_GE(ab, 0.0);
    EXPECT_EQ(hausdorff_distance(a, a), 0.0);
    EXPECT_LE(ab, hausdorff_distance(a, c) + hausdorff_distance(c, b) + 1e-12);
  }
}

TEST(Hausdorff, MatchesBruteForce) {
  std::mt19937 rng(8);
  for (int t = 0; t < 50; ++t) {
    const BoundarySet a = random_set(rng), b = random_set(rng);
    auto directed = [](const BoundarySet& x, const BoundarySet& y) {
      double worst = 0.0;
      for (const Point& p : x.points) {
        double best = 1e300;
        for (const Point& q : y.points) best = std::min(best, distance(p, q));
        worst = std::max(worst, best);
      }
      return worst;
    };
    EXPECT_NEAR(hausdorff_distance(a, b), std::max(directed(a, b), directed(b, a)), 1e-15);
  }
}

TEST(SlopeEstimate, PsiOnSquare) {
  const auto& s = square_psi();
  EXPECT_NEAR(slope_estimate(s.lim.field, s.fb, s.inst.domain, s.theta), 4.0, 0.4);
}

TEST(SlopeEstimate, UnitRamp) {
  const Grid g({-0.5, 0.0}, 1.0 / 128, 256, 128);
  const ScalarField u = sample(g, [](Point x) { return std::max(0.0, 0.5 - std::abs(x.x - 0.5)); });
  const RegionMask all(g, true);
  const BoundarySet fb = extract_free_boundary(u, all, 1e-3);
  EXPECT_NEAR(slope_estimate(u, fb, all, 1e-3), 1.0, 0.1);
}

TEST(SlopeEstimate, ScalesWithField) {
  const auto& s = square_psi();
  ScalarField twice = s.lim.field;
  for (double& v : twice.values()) v *= 2.0;
  // Doubling theta keeps the same positivity set and band.
  const double one = slope_estimate(s.lim.field, s.fb, s.inst.domain, s.theta);
  EXPECT_EQ(slope_estimate(twice, s.fb, s.inst.domain, 2 * s.theta), 2.0 * one);
}

TEST(SlopeEstimate, InvariantUnderRigidMotion) {
  std::mt19937 rng(606);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const Raster r = rasterize(DomainSpec::rectangle(1.0, 0.8), 64);
  const Grid& g = r.grid;
  for (int t = 0; t < 3; ++t) {
    const Point c{0.2 + 0.6 * U(rng), 0.2 + 0.4 * U(rng)};
    const double slope = 1.0 + 3.0 * U(rng);
    const ScalarField u = sample(g, [&](Point x) {
      return std::max(0.0, slope * (std::hypot(x.x - c.x, (x.y - c.y) * 1.3) - 0.12));
    });
    // Rotation by a quarter turn plus a translation of the grid.
    const Grid rg({5.0, -3.0}, g.h, g.ny, g.nx);
    ScalarField ru(rg);
    RegionMask rm(rg);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        ru.at(g.ny - 1 - j, i) = u.at(i, j);
        rm.set(g.ny - 1 - j, i, r.mask.at(i, j));
      }
    const double theta = 1e-3;
    const double a = slope_estimate(u, extract_free_boundary(u, r.mask, theta), r.mask, theta);
    const double b = slope_estimate(ru, extract_free_boundary(ru, rm, theta), rm, theta);
    EXPECT_NEAR(a, b, 1e-9 * a);
  }
}

TEST(SlopeEstimate, EmptyBandRejected) {
  const Grid g = box(64);
  // Positive on a strip two cells wide: no cell sits 2h or more inside.
  const ScalarField u = sample(g, [&](Point x) { return std::abs(x.x) < g.h ? 1.0 : 0.0; });
  const RegionMask all(g, true);
  const BoundarySet fb = extract_free_boundary(u, all, 0.5);
  EXPECT_THROW(slope_estimate(u, fb, all, 0.5), InvalidInput);
  EXPECT_THROW(slope_estimate(u, BoundarySet{}, all, 0.5), InvalidInput);
}

TEST(Nondegeneracy, PsiOnSquare) {
  const auto& s = square_psi();
  const double h = s.inst.h();
  const Nondegeneracy nd = nondegeneracy_check(s.lim.field, s.fb, s.inst.domain, {4 * h, 8 * h, 16 * h}, s.theta);
  EXPECT_NEAR(nd.gamma_sup, 4.0, 0.15 * 4.0);
  // The minimum growth quotient sits on the diagonals off the corners of
  // the zero square, where dist to fb is sqrt(2) times the distance to the
  // nearest edge line. Independent brute-force evaluation:
  double oracle = 1e300;
  for (std::size_t k = 0; k < s.inst.grid.size(); ++k) {
    if (!s.inst.domain[k] || !(s.lim.field[k] > s.theta)) continue;
    double d = 1e300;
    for (const Point& y : s.fb.points) d = std::min(d, distance(s.inst.grid.center(k), y));
    if (d >= 2 * h) oracle = std::min(oracle, s.lim.field[k] / (d + 0.5 * h));
  }
  EXPECT_NEAR(nd.gamma_growth, oracle, 1e-12);
  EXPECT_NEAR(nd.gamma_growth, 4.0 / std::numbers::sqrt2, 0.15 * 4.0 / std::numbers::sqrt2);
}

TEST(Nondegeneracy, PlateauIsReportedNotRejected) {
  const Grid g = box(64);
  const ScalarField u = sample(g, [](Point x) { return std::hypot(x.x, x.y) < 0.5 ? 0.01 : 0.0; });
  const RegionMask all(g, true);
  const BoundarySet fb = extract_free_boundary(u, all, 1e-3);
  const Nondegeneracy nd = nondegeneracy_check(u, fb, all, {4 * g.h}, 1e-3);
  EXPECT_LT(nd.gamma_growth, 0.05);
  EXPECT_GT(nd.gamma_growth, 0.0);
}

TEST(Nondegeneracy, RejectsSmallRadii) {
  const auto& s = square_psi();
  EXPECT_THROW(nondegeneracy_check(s.lim.field, s.fb, s.inst.domain, {3 * s.inst.h()}, s.theta), InvalidInput);
  EXPECT_THROW(nondegeneracy_check(s.lim.field, s.fb, s.inst.domain, {}, s.theta), InvalidInput);
}
