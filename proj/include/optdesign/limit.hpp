#pragma once
// The p -> infinity limit problem: Lip(f), the compatibility condition on
// the union of balls B_{f(y)/Lip(f)}(y), the critical slope lambda*, and the
// max-of-cones minimizer psi(x) = max_y (f(y) - lambda |x - y|)_+.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "optdesign/geometry.hpp"
#include "optdesign/problem.hpp"

namespace optdesign {

/// Max over sample pairs of |f(x) - f(y)| / |x - y| (chord distance).
/// Pairs closer than min_separation are skipped.
inline double boundary_lipschitz(const BoundaryData& bd, double min_separation = 0.0) {
  if (bd.samples.size() < 2) throw InvalidInput("boundary_lipschitz: need at least 2 samples");
  const auto& s = bd.samples;
  double best = 0.0;
  for (std::size_t a = 0; a < s.size(); ++a) {
    for (std::size_t b = a + 1; b < s.size(); ++b) {
      const double d = distance(s[a].point, s[b].point);
      if (d <= min_separation || d == 0.0) continue;
      best = std::max(best, std::abs(s[a].value - s[b].value) / d);
    }
  }
  return best;
}

struct ConditionH {
  bool holds = false;
  double lip_f = 0.0;
  double covered_volume = 0.0;  // |Omega_{Lip(f)}|
};

inline void require_alpha_in_range(const RegionMask& domain_mask, double alpha, const char* who) {
  const double full = measure(domain_mask);
  if (!(alpha > 0.0) || !(alpha < full)) {
    std::ostringstream os;
    os << who << ": alpha must lie in (0, " << full << "), got " << alpha;
    throw InvalidInput(os.str());
  }
}

inline ConditionH check_condition_H(const BoundaryData& bd, const RegionMask& domain_mask, double alpha) {
  require_alpha_in_range(domain_mask, alpha, "check_condition_H");
  ConditionH out;
  out.lip_f = boundary_lipschitz(bd, domain_mask.grid().h / 10.0);
  out.covered_volume = measure(union_of_balls(bd, out.lip_f, domain_mask));
  out.holds = out.covered_volume >= alpha;
  return out;
}

namespace detail {

inline double covered_measure(const ScalarField& reach, const RegionMask& domain_mask, double lambda) {
  std::size_t n = 0;
  for (std::size_t k = 0; k < reach.size(); ++k) n += (domain_mask[k] && reach[k] > lambda) ? 1 : 0;
  return static_cast<double>(n) * domain_mask.grid().cell_area();
}

// Boundary of a monotone predicate on [lo, hi]: pred(lo) != pred(hi).
template <class Pred>
double bisect(double lo, double hi, Pred pred) {
  const bool at_lo = pred(lo);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (pred(mid) == at_lo)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

}  // namespace detail

/// Default volume tolerance for solve_lambda_star: h times the raster
/// perimeter. The measure map jumps by whole rows of cells, so nothing much
/// finer is attainable on a grid.
inline double default_volume_tolerance(const RegionMask& domain_mask) {
  const double h = domain_mask.grid().h;
  return h * static_cast<double>(inner_boundary(domain_mask).count()) * h;
}

/// Slope lambda >= Lip(f) with | |Omega_lambda| - alpha | <= tol. The map
/// lambda -> |Omega_lambda| is a non-increasing step function; the result is
/// the midpoint of the lambda-interval meeting the tolerance.
inline double solve_lambda_star(const BoundaryData& bd, const RegionMask& domain_mask, double alpha, double tol,
                                const ScalarField* precomputed_reach = nullptr) {
  require_alpha_in_range(domain_mask, alpha, "solve_lambda_star");
  if (!(tol > 0.0)) throw InvalidInput("solve_lambda_star: tolerance must be positive");
  const ConditionH cond = check_condition_H(bd, domain_mask, alpha);
  if (!cond.holds) throw InvalidInput("solve_lambda_star: compatibility condition fails; lambda* is undefined");

  const ScalarField reach = precomputed_reach ? *precomputed_reach : ball_reach(bd, domain_mask.grid());
  auto m = [&](double lambda) { return detail::covered_measure(reach, domain_mask, lambda); };

  const double lo = cond.lip_f;
  double hi = 2.0 * bd.max_value() / domain_mask.grid().h;
  hi = std::max(hi, 2.0 * lo + 1.0);
  int doublings = 0;
  while (m(hi) > alpha + tol) {
    if (++doublings > 64) {
      std::ostringstream os;
      os << "solve_lambda_star: target volume " << alpha << " unreachable on this grid; achievable range ["
         << m(hi) << ", " << m(lo) << "]";
      throw ConvergenceError(os.str());
    }
    hi *= 2.0;
  }

  auto below_upper = [&](double lambda) { return m(lambda) <= alpha + tol; };
  auto above_lower = [&](double lambda) { return m(lambda) >= alpha - tol; };
  const double first = below_upper(lo) ? lo : detail::bisect(lo, hi, below_upper);
  double last = hi;
  if (!above_lower(hi)) {
    last = detail::bisect(lo, hi, above_lower);
    // bisect returns the first lambda where the predicate flips; step back inside.
    last = std::nextafter(last, lo);
    while (last > lo && !above_lower(last)) last = std::nextafter(last, lo);
  }
  if (first > last) {
    std::ostringstream os;
    os << "solve_lambda_star: no slope meets volume tolerance " << tol << " around alpha = " << alpha
       << "; measure jumps from " << m(std::nextafter(first, lo)) << " to " << m(first);
    throw ConvergenceError(os.str());
  }
  return 0.5 * (first + last);
}

/// psi(x) = max over samples y of (f(y) - lambda |x - y|)_+ at every cell.
inline ScalarField eval_psi(const BoundaryData& bd, double lambda, const Grid& grid) {
  if (!(lambda > 0.0)) throw InvalidInput("eval_psi: lambda must be positive");
  ScalarField out(grid);
  parallel_for(grid.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const Point x = grid.center(k);
      double best = 0.0;
      for (const auto& s : bd.samples) best = std::max(best, s.value - lambda * distance(x, s.point));
      out[k] = best;
    }
  });
  return out;
}

struct LimitSolution {
  double lambda = 0.0;  // lambda* when condition_H holds, Lip(f) otherwise
  RegionMask region;    // Omega* or D
  ScalarField field;    // psi
  double lip_f = 0.0;
  bool condition_H = false;
  double achieved_volume = 0.0;
  double covered_volume_at_lip = 0.0;  // |Omega_{Lip(f)}|
  bool convex_domain = true;
};

/// Under the compatibility condition: lambda*, Omega* and psi. Otherwise the
/// minimal solution psi at slope Lip(f), supported on D = Omega_{Lip(f)}.
inline LimitSolution solve_limit(const Instance& inst, std::optional<double> tol = std::nullopt) {
  const RegionMask& dom = inst.domain;
  const double alpha = inst.spec.alpha;
  LimitSolution out;
  const ConditionH cond = check_condition_H(inst.boundary, dom, alpha);
  out.lip_f = cond.lip_f;
  out.condition_H = cond.holds;
  out.covered_volume_at_lip = cond.covered_volume;
  out.convex_domain = inst.spec.domain.is_convex();
  const ScalarField reach = ball_reach(inst.boundary, inst.grid);
  if (cond.holds) {
    out.lambda = solve_lambda_star(inst.boundary, dom, alpha, tol.value_or(default_volume_tolerance(dom)), &reach);
  } else {
    out.lambda = cond.lip_f;
  }
  out.region = union_of_balls(reach, out.lambda, dom);
  out.achieved_volume = measure(out.region);
  out.field = eval_psi(inst.boundary, out.lambda, inst.grid);
  return out;
}

struct LipschitzEstimate {
  std::optional<double> exact;  // all pairs, when the node count is small enough
  double local = 0.0;           // one-sided differences over a 5x5 stencil
  double value() const { return exact.value_or(local); }
};

/// Discrete Lipschitz constant of `field` over the nodes of `mask` (plus the
/// one-cell outer ring when include_ring is set).
inline LipschitzEstimate discrete_lipschitz(const ScalarField& field, const RegionMask& mask, bool include_ring = true,
                                            std::size_t exact_limit = 40000) {
  if (!(field.grid() == mask.grid())) throw InvalidInput("discrete_lipschitz: grids differ");
  if (mask.empty()) throw InvalidInput("discrete_lipschitz: mask is empty");
  const Grid& g = mask.grid();
  const RegionMask nodes = include_ring ? (mask | outer_ring(mask, 1)) : mask;

  LipschitzEstimate est;
  static constexpr int offsets[][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}, {2, 0}, {0, 2}, {2, 1},
                                       {1, 2}, {2, -1}, {1, -2}, {2, 2}, {2, -2}};
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (!nodes.at(i, j)) continue;
      const double u = field.at(i, j);
      for (const auto& o : offsets) {
        const int a = i + o[0], b = j + o[1];
        if (!nodes.at(a, b)) continue;
        const double d = std::hypot(o[0], o[1]) * g.h;
        est.local = std::max(est.local, std::abs(field.at(a, b) - u) / d);
      }
    }
  }

  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < nodes.size(); ++k)
    if (nodes[k]) idx.push_back(k);
  if (idx.size() <= exact_limit) {
    std::vector<Point> pts(idx.size());
    std::vector<double> val(idx.size());
    for (std::size_t n = 0; n < idx.size(); ++n) {
      pts[n] = g.center(idx[n]);
      val[n] = field[idx[n]];
    }
    std::vector<double> row_best(idx.size(), 0.0);
    parallel_for(idx.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t a = begin; a < end; ++a) {
        double best = 0.0;
        for (std::size_t b = a + 1; b < idx.size(); ++b) {
          const double dx = pts[a].x - pts[b].x, dy = pts[a].y - pts[b].y;
          const double du = val[a] - val[b];
          const double q = du * du / (dx * dx + dy * dy);
          best = std::max(best, q);
        }
        row_best[a] = best;
      }
    });
    est.exact = std::sqrt(*std::max_element(row_best.begin(), row_best.end()));
  }
  return est;
}

}  // namespace optdesign
