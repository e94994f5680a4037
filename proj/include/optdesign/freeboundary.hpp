#pragma once
// Free boundaries of grid fields: extraction, Hausdorff distance, slope at
// the free boundary and nondegeneracy constants.
//
// A free-boundary point is the center of a cell inside {u > theta} with a
// 4-neighbor in the domain but outside the set, so the sampled interface
// sits on average h/2 beyond the points. Distance quotients add that h/2.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "optdesign/errors.hpp"
#include "optdesign/geometry.hpp"
#include "optdesign/parallel.hpp"

namespace optdesign {

struct BoundarySet {
  std::vector<Point> points;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
};

inline BoundarySet extract_free_boundary(const ScalarField& field, const RegionMask& domain_mask, double theta) {
  if (!(theta > 0.0)) throw InvalidInput("extract_free_boundary: theta must be positive");
  if (!(field.grid() == domain_mask.grid())) throw InvalidInput("extract_free_boundary: grids differ");
  const Grid& g = field.grid();
  auto positive = [&](int i, int j) { return domain_mask.at(i, j) && field.at(i, j) > theta; };
  auto zero = [&](int i, int j) { return domain_mask.at(i, j) && !(field.at(i, j) > theta); };
  BoundarySet out;
  bool any_positive = false;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (!positive(i, j)) continue;
      any_positive = true;
      if (zero(i - 1, j) || zero(i + 1, j) || zero(i, j - 1) || zero(i, j + 1)) out.points.push_back(g.center(i, j));
    }
  if (!any_positive) throw InvalidInput("extract_free_boundary: positivity set is empty");
  if (out.empty()) throw InvalidInput("extract_free_boundary: positivity set has no free boundary inside the domain");
  return out;
}

/// Distance from x to the nearest point of s.
inline double distance_to(const BoundarySet& s, Point x) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& y : s.points) best = std::min(best, (x.x - y.x) * (x.x - y.x) + (x.y - y.y) * (x.y - y.y));
  return std::sqrt(best);
}

namespace detail {

inline double directed_hausdorff(const BoundarySet& a, const BoundarySet& b) {
  std::vector<double> best(a.size(), 0.0);
  parallel_for(a.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) best[k] = distance_to(b, a.points[k]);
  });
  return *std::max_element(best.begin(), best.end());
}

/// Distance from every cell center with `select` set to the set s.
template <class Select>
std::vector<std::pair<std::size_t, double>> distances_from(const BoundarySet& s, const Grid& g, Select select) {
  std::vector<std::size_t> cells;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (select(k)) cells.push_back(k);
  std::vector<std::pair<std::size_t, double>> out(cells.size());
  parallel_for(cells.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t n = begin; n < end; ++n) out[n] = {cells[n], distance_to(s, g.center(cells[n]))};
  });
  return out;
}

inline double median(std::vector<double> v) {
  const std::size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end());
  const double hi = v[m];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m));
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// max(sup_a dist(., b), sup_b dist(., a)), exact over the point lists.
inline double hausdorff_distance(const BoundarySet& a, const BoundarySet& b) {
  if (a.empty() || b.empty()) throw InvalidInput("hausdorff_distance: sets must be non-empty");
  return std::max(detail::directed_hausdorff(a, b), detail::directed_hausdorff(b, a));
}

/// Median of u(x) / (dist(x, fb) + h/2) over domain cells with u > theta and
/// 2h <= dist(x, fb) <= 6h.
inline double slope_estimate(const ScalarField& field, const BoundarySet& fb, const RegionMask& domain_mask,
                             double theta) {
  if (fb.empty()) throw InvalidInput("slope_estimate: free boundary is empty");
  if (!(field.grid() == domain_mask.grid())) throw InvalidInput("slope_estimate: grids differ");
  const Grid& g = field.grid();
  const double h = g.h;
  const auto dist = detail::distances_from(fb, g, [&](std::size_t k) { return domain_mask[k] && field[k] > theta; });
  std::vector<double> quotients;
  for (const auto& [k, d] : dist)
    if (d >= 2.0 * h * (1 - 1e-12) && d <= 6.0 * h * (1 + 1e-12)) quotients.push_back(field[k] / (d + 0.5 * h));
  if (quotients.empty()) throw InvalidInput("slope_estimate: no cells in the band [2h, 6h] off the free boundary");
  return detail::median(std::move(quotients));
}

struct Nondegeneracy {
  double gamma_growth = 0.0;  // min of u / dist to fb over the positivity set, dist >= 2h
  double gamma_sup = 0.0;     // min over fb points and radii of sup_{B_r} u / r
};

inline Nondegeneracy nondegeneracy_check(const ScalarField& field, const BoundarySet& fb, const RegionMask& domain_mask,
                                         const std::vector<double>& radii, double theta) {
  if (fb.empty()) throw InvalidInput("nondegeneracy_check: free boundary is empty");
  if (radii.empty()) throw InvalidInput("nondegeneracy_check: need at least one radius");
  if (!(field.grid() == domain_mask.grid())) throw InvalidInput("nondegeneracy_check: grids differ");
  const Grid& g = field.grid();
  const double h = g.h;
  for (double r : radii)
    if (!(r >= 4.0 * h * (1 - 1e-12))) throw InvalidInput("nondegeneracy_check: radii must be at least 4h");

  Nondegeneracy out;
  out.gamma_growth = std::numeric_limits<double>::infinity();
  const auto dist = detail::distances_from(fb, g, [&](std::size_t k) { return domain_mask[k] && field[k] > theta; });
  for (const auto& [k, d] : dist)
    if (d >= 2.0 * h * (1 - 1e-12)) out.gamma_growth = std::min(out.gamma_growth, field[k] / (d + 0.5 * h));
  if (!std::isfinite(out.gamma_growth)) out.gamma_growth = 0.0;

  std::vector<double> per_point(fb.size(), std::numeric_limits<double>::infinity());
  parallel_for(fb.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t n = begin; n < end; ++n) {
      const Point x0 = fb.points[n];
      for (double r : radii) {
        const int reach = static_cast<int>(std::ceil(r / h)) + 1;
        const auto [ci, cj] = g.locate(x0);
        double sup = 0.0;
        for (int j = cj - reach; j <= cj + reach; ++j)
          for (int i = ci - reach; i <= ci + reach; ++i) {
            if (!domain_mask.at(i, j)) continue;
            if (distance(g.center(i, j), x0) <= r * (1 + 1e-12)) sup = std::max(sup, field.at(i, j));
          }
        per_point[n] = std::min(per_point[n], sup / r);
      }
    }
  });
  out.gamma_sup = *std::min_element(per_point.begin(), per_point.end());
  return out;
}

}  // namespace optdesign
