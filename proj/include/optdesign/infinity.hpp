#pragma once
// Dirichlet problems for the infinity-Laplacian on a grid region, solved with
// a monotone distance-weighted midrange scheme, and a central-difference
// evaluation of Du D^2u Du^T for diagnostics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "optdesign/geometry.hpp"

namespace optdesign {

/// Region where the equation holds plus fixed values on every other cell.
/// Only cells within the stencil radius of the region are ever read.
struct DirichletProblem {
  RegionMask region;
  ScalarField data;
};

/// Region plus data: 0 on domain cells outside the region, `exterior` on
/// cells outside the domain.
inline DirichletProblem make_dirichlet_problem(const RegionMask& region, const RegionMask& domain,
                                               const ScalarField& exterior) {
  DirichletProblem prob{region, ScalarField(region.grid())};
  for (std::size_t k = 0; k < region.size(); ++k) prob.data[k] = domain[k] ? 0.0 : exterior[k];
  return prob;
}

/// Same problem with the data carried by the domain's own boundary layer: the
/// cells of `domain` with a 4-neighbor outside it are removed from the region
/// and hold `values`, as do cells outside the domain. Unlike the exterior
/// ring, the layer holds data inside the domain, so no half-cell offset enters.
inline DirichletProblem make_boundary_layer_problem(const RegionMask& region, const RegionMask& domain,
                                                    const ScalarField& values) {
  const RegionMask layer = inner_boundary(domain);
  DirichletProblem prob{region.minus(layer), ScalarField(region.grid())};
  for (std::size_t k = 0; k < region.size(); ++k) prob.data[k] = (!domain[k] || layer[k]) ? values[k] : 0.0;
  return prob;
}

/// max over samples of (f(y) - slope |x - y|)_+. For slope >= Lip(f) this is
/// a Lipschitz extension of f off the boundary.
inline ScalarField lipschitz_extension(const BoundaryData& bd, double slope, const Grid& grid) {
  ScalarField out(grid);
  parallel_for(grid.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const Point x = grid.center(k);
      double best = 0.0;
      for (const auto& s : bd.samples) best = std::max(best, s.value - slope * distance(x, s.point));
      out[k] = best;
    }
  });
  return out;
}

struct InfinitySolverOptions {
  double stencil_radius = 0.0;  // 0 selects 3h
  double tol = 0.0;             // 0 selects 1e-9 times the data range
  int max_iters = 100000;
};

struct InfinityHarmonicResult {
  ScalarField field;
  int sweeps = 0;
  double last_change = 0.0;
  std::vector<double> changes;  // sup-norm update per sweep
};

namespace detail {

inline std::vector<std::pair<int, int>> ball_offsets(double radius_cells) {
  std::vector<std::pair<int, int>> out;
  const int r = static_cast<int>(std::floor(radius_cells + 1e-9));
  for (int dj = -r; dj <= r; ++dj)
    for (int di = -r; di <= r; ++di)
      if ((di != 0 || dj != 0) && di * di + dj * dj <= radius_cells * radius_cells + 1e-9) out.emplace_back(di, dj);
  return out;
}

}  // namespace detail

/// Gauss-Seidel sweeps in raster order until the largest per-sweep change
/// drops below tol.
///
/// Each node is set to the distance-weighted midrange of its stencil: for the
/// neighbor pair (j, k) maximizing (u_j - u_k) / (d_j + d_k),
///     u = (d_k u_j + d_j u_k) / (d_j + d_k),
/// which balances the steepest ascent and descent slopes and reduces to
/// (max + min) / 2 when the extremal pair is equidistant. The stencil holds
/// region cells within the radius plus data cells of the first ring around the
/// region, so near the boundary it is clipped at the data instead of reaching
/// past it. An offset is kept only when its mirror image is also in the
/// stencil; the symmetric direction set makes linear data an exact fixed point.
inline InfinityHarmonicResult solve_infinity_harmonic(const DirichletProblem& problem,
                                                      InfinitySolverOptions opts = {}) {
  const RegionMask& region = problem.region;
  const Grid& g = region.grid();
  if (!(problem.data.grid() == g)) throw InvalidInput("solve_infinity_harmonic: grids differ");
  if (region.empty()) throw InvalidInput("solve_infinity_harmonic: region is empty");
  if (region.count() == region.size()) throw InvalidInput("solve_infinity_harmonic: region has no boundary");
  const double radius = opts.stencil_radius > 0.0 ? opts.stencil_radius : 3.0 * g.h;
  if (radius < 2.0 * g.h - 1e-12) throw InvalidInput("solve_infinity_harmonic: stencil radius must be at least 2h");
  const auto offsets = detail::ball_offsets(radius / g.h);
  const RegionMask ring = outer_ring(region, 1);

  double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
  std::size_t n_ring = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!ring[k]) continue;
    const double v = problem.data[k];
    if (!std::isfinite(v)) throw InvalidInput("solve_infinity_harmonic: boundary data must be finite");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
    ++n_ring;
  }
  if (n_ring == 0) throw InvalidInput("solve_infinity_harmonic: region touches no boundary cell");
  const double range = hi - lo;
  const double tol = opts.tol > 0.0 ? opts.tol : std::max(1e-9 * range, 1e-300);

  InfinityHarmonicResult out{problem.data, 0, 0.0, {}};
  ScalarField& u = out.field;
  const double mean = sum / static_cast<double>(n_ring);
  std::vector<std::size_t> nodes;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (region[k]) {
      u[k] = mean;
      nodes.push_back(k);
    }

  struct Neighbor {
    std::size_t index;
    double dist;
  };
  std::vector<std::size_t> start(nodes.size() + 1, 0);
  std::vector<Neighbor> nbr;
  nbr.reserve(nodes.size() * offsets.size());
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const int i = g.col(nodes[n]), j = g.row(nodes[n]);
    for (auto [di, dj] : offsets) {
      const int a = i + di, b = j + dj;
      if (!g.in_bounds(a, b)) continue;
      const std::size_t k = g.index(a, b);
      const int a2 = i - di, b2 = j - dj;
      const bool mirrored = g.in_bounds(a2, b2) && (region.at(a2, b2) || ring.at(a2, b2));
      if ((region[k] || ring[k]) && mirrored) nbr.push_back({k, std::hypot(di, dj) * g.h});
    }
    start[n + 1] = nbr.size();
  }

  if (range == 0.0) {
    for (std::size_t k : nodes) u[k] = lo;
    return out;
  }

  // Extremal pair per node, cached across sweeps: with the previous pair as a
  // starting guess the local update usually costs one pass over the stencil.
  std::vector<std::pair<std::size_t, std::size_t>> pair(nodes.size(), {0, 0});
  for (std::size_t n = 0; n < nodes.size(); ++n) pair[n] = {start[n], start[n] + 1};

  auto full_search = [&](std::size_t n) {
    const std::size_t b = start[n], e = start[n + 1];
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t p = b; p < e; ++p) {
      const double up = u[nbr[p].index], dp = nbr[p].dist;
      for (std::size_t q = p + 1; q < e; ++q) {
        const double s = (up - u[nbr[q].index]) / (dp + nbr[q].dist);
        if (s > best) {
          best = s;
          pair[n] = {p, q};
        } else if (-s > best) {
          best = -s;
          pair[n] = {q, p};
        }
      }
    }
  };
  auto balance = [&](std::size_t p, std::size_t q) {
    const double dp = nbr[p].dist, dq = nbr[q].dist;
    return (dq * u[nbr[p].index] + dp * u[nbr[q].index]) / (dp + dq);
  };

  for (int sweep = 1; sweep <= opts.max_iters; ++sweep) {
    double change = 0.0;
    for (std::size_t n = 0; n < nodes.size(); ++n) {
      const std::size_t b = start[n], e = start[n + 1];
      double t = balance(pair[n].first, pair[n].second);
      bool settled = false;
      for (int it = 0; it < 4 && !settled; ++it) {
        // Steepest ascent and descent slopes seen from value t.
        double up_slope = -std::numeric_limits<double>::infinity(), down_slope = up_slope;
        std::size_t jp = b, kq = b;
        for (std::size_t q = b; q < e; ++q) {
          const double v = u[nbr[q].index], d = nbr[q].dist;
          const double a = (v - t) / d;
          if (a > up_slope) {
            up_slope = a;
            jp = q;
          }
          if (-a > down_slope) {
            down_slope = -a;
            kq = q;
          }
        }
        if (std::abs(up_slope - down_slope) <= 1e-13 * (std::abs(up_slope) + std::abs(down_slope)) + 1e-300) {
          settled = true;
        } else {
          pair[n] = {jp, kq};
          t = balance(jp, kq);
        }
      }
      if (!settled) {
        full_search(n);
        t = balance(pair[n].first, pair[n].second);
      }
      change = std::max(change, std::abs(t - u[nodes[n]]));
      u[nodes[n]] = t;
    }
    out.sweeps = sweep;
    out.last_change = change;
    out.changes.push_back(change);
    if (change < tol) return out;
  }
  std::ostringstream os;
  os << "solve_infinity_harmonic: no convergence after " << opts.max_iters << " sweeps, last change "
     << out.last_change << " (tol " << tol << ")";
  throw ConvergenceError(os.str());
}

struct ResidualField {
  ScalarField values;      // 0 where not evaluated
  RegionMask evaluated;    // nodes with a full 2-cell margin inside the mask
  std::size_t excluded = 0;  // mask nodes skipped

  double max_abs() const {
    double m = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k)
      if (evaluated[k]) m = std::max(m, std::abs(values[k]));
    return m;
  }
};

namespace detail {

inline bool has_margin(const RegionMask& mask, int i, int j, int margin) {
  for (int dj = -margin; dj <= margin; ++dj)
    for (int di = -margin; di <= margin; ++di)
      if (!mask.at(i + di, j + dj)) return false;
  return true;
}

struct Derivatives {
  double ux, uy, uxx, uyy, uxy;
};

inline Derivatives central_derivatives(const ScalarField& u, int i, int j) {
  const double h = u.grid().h;
  Derivatives d{};
  d.ux = (u.at(i + 1, j) - u.at(i - 1, j)) / (2.0 * h);
  d.uy = (u.at(i, j + 1) - u.at(i, j - 1)) / (2.0 * h);
  d.uxx = (u.at(i + 1, j) - 2.0 * u.at(i, j) + u.at(i - 1, j)) / (h * h);
  d.uyy = (u.at(i, j + 1) - 2.0 * u.at(i, j) + u.at(i, j - 1)) / (h * h);
  d.uxy = (u.at(i + 1, j + 1) - u.at(i + 1, j - 1) - u.at(i - 1, j + 1) + u.at(i - 1, j - 1)) / (4.0 * h * h);
  return d;
}

}  // namespace detail

/// Du D^2u Du^T by central differences at mask nodes with a 2-cell margin.
inline ResidualField infinity_residual(const ScalarField& field, const RegionMask& mask) {
  if (!(field.grid() == mask.grid())) throw InvalidInput("infinity_residual: grids differ");
  const Grid& g = mask.grid();
  ResidualField out{ScalarField(g), RegionMask(g), 0};
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (!mask.at(i, j)) continue;
      if (!detail::has_margin(mask, i, j, 2)) {
        ++out.excluded;
        continue;
      }
      const auto d = detail::central_derivatives(field, i, j);
      out.values.at(i, j) = d.ux * d.ux * d.uxx + 2.0 * d.ux * d.uy * d.uxy + d.uy * d.uy * d.uyy;
      out.evaluated.set(i, j, true);
    }
  return out;
}

}  // namespace optdesign
