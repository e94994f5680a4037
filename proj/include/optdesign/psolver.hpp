#pragma once
// Penalized p-Dirichlet minimization on a grid.
//
// The discrete functional is
//
//     J(u) = E_delta(u)^{1/p} + L (V_eps(u) - alpha)^+,
//     E_delta(u) = sum_T |T| (|grad_T u|^2 + delta^2)^{p/2},
//     V_eps(u)   = sum_c h^2 clamp(u_c / eps, 0, 1),
//
// with T running over the four right triangles of every grid square (both
// diagonal splits, each weighted h^2/4) and u pinned to the nearest boundary
// sample on the one-cell ring around the domain. Minimization is by projected
// Newton steps under a continuation in (eps, delta, p).

#include <Eigen/Sparse>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "optdesign/geometry.hpp"
#include "optdesign/infinity.hpp"
#include "optdesign/problem.hpp"

namespace optdesign {

/// L (volume - alpha)^+.
inline double penalty(double volume, double alpha, double L) {
  if (!(L >= 0.0)) throw InvalidInput("penalty: L must be non-negative");
  return L * std::max(volume - alpha, 0.0);
}

/// (sum |grad u|^p h^2)^{1/p} over the nodes of `mask`, with the largest
/// gradient factored out so that large p cannot overflow.
///
/// Gradients live on grid squares (four neighboring nodes): each component is
/// the forward difference along the square's two parallel edges, averaged.
/// A node carries the mean of |grad|^p over its four squares. One-sided
/// differences of a single node would read 4 sqrt(2) on the ridge of a
/// slope-4 cone pair, which dominates the sum at large p.
inline double p_energy_root(const ScalarField& field, const RegionMask& mask, double p) {
  if (!(p > 1.0)) throw InvalidInput("p_energy_root: p must exceed 1");
  if (!(field.grid() == mask.grid())) throw InvalidInput("p_energy_root: grids differ");
  const Grid& g = mask.grid();
  // Square (i, j) has corners (i, j), (i+1, j), (i, j+1), (i+1, j+1).
  std::vector<double> norms;
  std::vector<int> weights;  // corners of the square inside the mask
  for (int j = -1; j < g.ny; ++j)
    for (int i = -1; i < g.nx; ++i) {
      const int inside = mask.at(i, j) + mask.at(i + 1, j) + mask.at(i, j + 1) + mask.at(i + 1, j + 1);
      if (inside == 0) continue;
      if (!g.in_bounds(i, j) || !g.in_bounds(i + 1, j + 1))
        throw InvalidInput("p_energy_root: mask touches the grid edge");
      const double a = field.at(i, j), b = field.at(i + 1, j), c = field.at(i, j + 1), d = field.at(i + 1, j + 1);
      norms.push_back(std::hypot(0.5 * ((b - a) + (d - c)) / g.h, 0.5 * ((c - a) + (d - b)) / g.h));
      weights.push_back(inside);
    }
  const double M = norms.empty() ? 0.0 : *std::max_element(norms.begin(), norms.end());
  if (M == 0.0 || !std::isfinite(M)) return M;
  double sum = 0.0;
  for (std::size_t k = 0; k < norms.size(); ++k) sum += 0.25 * weights[k] * std::pow(norms[k] / M, p);
  return M * std::pow(sum * g.cell_area(), 1.0 / p);
}

struct SolverConfig {
  double p = 8.0;
  double L = 8.0;
  double epsilon_start = 0.0;  // 0 selects max f
  double epsilon_end = 0.0;    // 0 selects h max f
  double delta_start = 1e-2;
  double delta_end = 1e-4;
  int stages = 0;            // 0 selects one stage per halving of epsilon
  int max_iters = 200;       // Newton steps per stage
  double tolerance = 1e-7;   // a stage ends once max |step| <= tolerance * max f
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 40;
  double L_max = 0.0;             // 0 selects 4096 p
  double volume_tolerance = 0.0;  // 0 selects 4h
  std::optional<ScalarField> initial;

  void validate() const {
    auto bad = [](const std::string& msg) { throw InvalidInput("solver config: " + msg); };
    if (!(p > 2.0) || !std::isfinite(p)) bad("p must be a finite number greater than 2");
    if (!(L >= 0.0) || !std::isfinite(L)) bad("L must be non-negative");
    if (epsilon_start < 0.0 || epsilon_end < 0.0) bad("epsilon must be positive (0 selects the default)");
    if (!(delta_start > 0.0) || !(delta_end > 0.0) || delta_end > delta_start)
      bad("delta must satisfy 0 < delta_end <= delta_start");
    if (stages < 0 || max_iters < 1) bad("stages must be >= 0 and max_iters >= 1");
    if (!(tolerance > 0.0)) bad("tolerance must be positive");
    if (!(armijo > 0.0 && armijo < 0.5)) bad("armijo must lie in (0, 0.5)");
    if (!(backtrack > 0.0 && backtrack < 1.0)) bad("backtrack must lie in (0, 1)");
    if (max_backtracks < 1) bad("max_backtracks must be >= 1");
    if (L_max < 0.0 || volume_tolerance < 0.0) bad("L_max and volume_tolerance must be non-negative");
  }
};

struct PSolution {
  ScalarField field;
  double volume = 0.0;       // |{u > theta_pos}|
  double energy_root = 0.0;  // p_energy_root over the domain
  double objective = 0.0;    // J at the final smoothing parameters
  double L_used = 0.0;
  double p = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> volume_trace;  // one entry per value of L tried
  std::vector<std::vector<double>> objective_trace;  // per stage: J at its start and after each accepted step
};

/// |{u > theta}| over the cells of `mask`.
inline double positive_volume(const ScalarField& u, const RegionMask& mask, double theta) {
  std::size_t n = 0;
  for (std::size_t k = 0; k < u.size(); ++k) n += (mask[k] && u[k] > theta) ? 1 : 0;
  return static_cast<double>(n) * mask.grid().cell_area();
}

namespace detail {

class PenalizedFunctional {
 public:
  struct Triangle {
    std::array<std::size_t, 3> v;  // right-angle vertex, x-neighbor, y-neighbor
    double sx, sy;
  };

  explicit PenalizedFunctional(const Instance& inst) : inst_(inst), h_(inst.h()) {
    const Grid& g = inst.grid;
    const RegionMask& dom = inst.domain;
    const RegionMask ring = outer_ring(dom, 1);
    id_.assign(g.size(), -1);
    for (std::size_t k = 0; k < g.size(); ++k)
      if (dom[k]) {
        id_[k] = static_cast<long>(cells_.size());
        cells_.push_back(k);
      }
    for (int j = 0; j + 1 < g.ny; ++j)
      for (int i = 0; i + 1 < g.nx; ++i) {
        const std::size_t c00 = g.index(i, j), c10 = g.index(i + 1, j), c01 = g.index(i, j + 1),
                          c11 = g.index(i + 1, j + 1);
        const std::size_t c[4] = {c00, c10, c01, c11};
        bool any = false, all = true;
        for (auto k : c) {
          any = any || dom[k];
          all = all && (dom[k] || ring[k]);
        }
        if (!any || !all) continue;
        tris_.push_back({{c00, c10, c01}, 1.0, 1.0});
        tris_.push_back({{c11, c01, c10}, -1.0, -1.0});
        tris_.push_back({{c10, c00, c11}, -1.0, 1.0});
        tris_.push_back({{c01, c11, c00}, 1.0, -1.0});
      }
  }

  std::size_t unknowns() const { return cells_.size(); }
  const std::vector<std::size_t>& cells() const { return cells_; }
  long id(std::size_t k) const { return id_[k]; }

  struct Energy {
    double root = 0.0;  // E^{1/p}
    double M2 = 0.0;    // max of |g|^2 + delta^2
    double s = 0.0;     // sum |T| (q / M2)^{p/2}
  };

  Energy energy(const ScalarField& u, double p, double delta) const {
    Energy e;
    const double d2 = delta * delta;
    for (const auto& t : tris_) e.M2 = std::max(e.M2, q_of(u, t, d2));
    const double area = 0.25 * h_ * h_;
    for (const auto& t : tris_) e.s += area * std::pow(q_of(u, t, d2) / e.M2, 0.5 * p);
    e.root = std::sqrt(e.M2) * std::pow(e.s, 1.0 / p);
    return e;
  }

  double volume(const ScalarField& u, double eps) const {
    double v = 0.0;
    for (auto k : cells_) v += std::clamp(u[k] / eps, 0.0, 1.0);
    return v * h_ * h_;
  }

  /// Gradient and Gauss-Newton Hessian of E^{1/p} in the unknowns. The
  /// rank-one concave part of the root is dropped so the matrix stays positive.
  void derivatives(const ScalarField& u, double p, double delta, const Energy& e, Eigen::VectorXd& grad,
                   std::vector<Eigen::Triplet<double>>& hess) const {
    const std::size_t n = unknowns();
    grad.setZero(static_cast<Eigen::Index>(n));
    hess.clear();
    hess.reserve(tris_.size() * 9);
    const double d2 = delta * delta;
    const double area = 0.25 * h_ * h_;
    const double coef = std::pow(e.s, 1.0 / p - 1.0) / std::sqrt(e.M2);
    for (const auto& t : tris_) {
      const double gx = t.sx * (u[t.v[1]] - u[t.v[0]]) / h_;
      const double gy = t.sy * (u[t.v[2]] - u[t.v[0]]) / h_;
      const double q = gx * gx + gy * gy + d2;
      const double w = coef * area * std::pow(q / e.M2, 0.5 * p - 1.0);
      // B maps (u_a, u_b, u_c) to (gx, gy).
      const double B[2][3] = {{-t.sx / h_, t.sx / h_, 0.0}, {-t.sy / h_, 0.0, t.sy / h_}};
      const double A[2][2] = {{1.0 + (p - 2.0) * gx * gx / q, (p - 2.0) * gx * gy / q},
                              {(p - 2.0) * gx * gy / q, 1.0 + (p - 2.0) * gy * gy / q}};
      for (int a = 0; a < 3; ++a) {
        const long ia = id_[t.v[a]];
        if (ia < 0) continue;
        grad[ia] += w * (B[0][a] * gx + B[1][a] * gy);
        for (int b = 0; b < 3; ++b) {
          const long ib = id_[t.v[b]];
          if (ib < 0) continue;
          double kab = 0.0;
          for (int r = 0; r < 2; ++r)
            for (int s = 0; s < 2; ++s) kab += B[r][a] * A[r][s] * B[s][b];
          hess.emplace_back(ia, ib, w * kab);
        }
      }
    }
  }

 private:
  double q_of(const ScalarField& u, const Triangle& t, double d2) const {
    const double gx = (u[t.v[1]] - u[t.v[0]]) / h_;
    const double gy = (u[t.v[2]] - u[t.v[0]]) / h_;
    return gx * gx + gy * gy + d2;
  }

  const Instance& inst_;
  double h_;
  std::vector<long> id_;
  std::vector<std::size_t> cells_;
  std::vector<Triangle> tris_;
};

}  // namespace detail

namespace detail {

// One continuation pass from u0: eps from eps0 down to epsilon_end, delta from
// delta_start to delta_end, p from p_start up to config.p over the first half.
inline PSolution descend(const Instance& inst, const SolverConfig& config, const ScalarField& u0, double p_start,
                         double eps0) {
  const double fmax = inst.f_max();
  const double h = inst.h();
  const double alpha = inst.spec.alpha;
  const double eps1 = config.epsilon_end > 0.0 ? config.epsilon_end : h * fmax;
  if (eps1 > eps0) throw InvalidInput("solver config: epsilon_end must not exceed epsilon_start");
  const int stages =
      config.stages > 0 ? config.stages : std::max(2, static_cast<int>(std::ceil(std::log2(eps0 / eps1))) + 1);

  detail::PenalizedFunctional fn(inst);
  const std::size_t n = fn.unknowns();
  const auto& cells = fn.cells();

  ScalarField u = inst.exterior_values;
  for (auto k : cells) u[k] = std::max(0.0, u0[k]);

  PSolution out;
  out.p = config.p;
  out.L_used = config.L;
  const double L = config.L;

  Eigen::VectorXd gE, gV(static_cast<Eigen::Index>(n)), d0, d1, d;
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  ScalarField trial = u;
  bool stage_converged = false;
  double J = 0.0;

  for (int s = 0; s < stages; ++s) {
    const double t = stages == 1 ? 1.0 : static_cast<double>(s) / (stages - 1);
    const double eps = eps0 * std::pow(eps1 / eps0, t);
    const double delta = config.delta_start * std::pow(config.delta_end / config.delta_start, t);
    const double p = p_start * std::pow(config.p / p_start, std::min(1.0, 2.0 * t));

    auto objective = [&](const ScalarField& v, detail::PenalizedFunctional::Energy& e, double& vol) {
      e = fn.energy(v, p, delta);
      vol = fn.volume(v, eps);
      return e.root + L * std::max(vol - alpha, 0.0);
    };

    detail::PenalizedFunctional::Energy e;
    double vol = 0.0;
    J = objective(u, e, vol);
    out.objective_trace.push_back({J});
    stage_converged = false;
    double lm = 1e-10;
    int stalls = 0;
    for (int it = 0; it < config.max_iters && !stage_converged; ++it) {
      if (!std::isfinite(J)) {
        std::ostringstream os;
        os << "minimize_penalized: objective became non-finite at p = " << p
           << "; use a smaller p or a smaller step (backtrack factor)";
        throw ConvergenceError(os.str());
      }
      ++out.iterations;
      fn.derivatives(u, p, delta, e, gE, trip);
      for (std::size_t m = 0; m < n; ++m) {
        const double v = u[cells[m]];
        gV[static_cast<Eigen::Index>(m)] = (v >= 0.0 && v < eps) ? h * h / eps : 0.0;
      }
      const bool penalized = vol >= alpha;
      const Eigen::VectorXd gJ = penalized ? Eigen::VectorXd(gE + L * gV) : gE;

      // Cells held at zero by the bound.
      std::vector<char> active(n, 0);
      for (std::size_t m = 0; m < n; ++m) active[m] = (u[cells[m]] <= 0.0 && gJ[static_cast<Eigen::Index>(m)] > 0.0);

      double diag_max = 0.0;
      for (const auto& tr : trip)
        if (tr.row() == tr.col()) diag_max = std::max(diag_max, std::abs(tr.value()));
      std::vector<Eigen::Triplet<double>> free_trip;
      free_trip.reserve(trip.size() + n);
      for (const auto& tr : trip)
        if (!active[tr.row()] && !active[tr.col()]) free_trip.push_back(tr);
      for (std::size_t m = 0; m < n; ++m)
        free_trip.emplace_back(m, m, active[m] ? 1.0 : lm * std::max(diag_max, 1e-300));
      Eigen::SparseMatrix<double> H(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      H.setFromTriplets(free_trip.begin(), free_trip.end());
      ldlt.compute(H);
      if (ldlt.info() != Eigen::Success) {
        lm *= 100.0;
        continue;
      }
      Eigen::VectorXd r0 = -gE, r1 = -(gE + L * gV);
      for (std::size_t m = 0; m < n; ++m)
        if (active[m]) r0[static_cast<Eigen::Index>(m)] = r1[static_cast<Eigen::Index>(m)] = 0.0;
      d0 = ldlt.solve(r0);
      d1 = ldlt.solve(r1);

      // Piecewise model: follow d0 while the linearized volume stays below
      // alpha, d1 once it is above, and blend where the kink is crossed.
      const double v0 = vol + gV.dot(d0), v1 = vol + gV.dot(d1);
      if (v0 <= alpha || L == 0.0)
        d = d0;
      else if (v1 >= alpha)
        d = d1;
      else
        d = d0 + ((v0 - alpha) / (v0 - v1)) * (d1 - d0);

      const double slope = gJ.dot(d);
      double step = 1.0;
      bool accepted = false;
      double J_trial = J, vol_trial = vol;
      detail::PenalizedFunctional::Energy e_trial;
      double max_step = 0.0;
      for (int bt = 0; bt < config.max_backtracks; ++bt) {
        max_step = 0.0;
        for (std::size_t m = 0; m < n; ++m) {
          const std::size_t k = cells[m];
          trial[k] = std::max(0.0, u[k] + step * d[static_cast<Eigen::Index>(m)]);
          max_step = std::max(max_step, std::abs(trial[k] - u[k]));
        }
        J_trial = objective(trial, e_trial, vol_trial);
        if (J_trial <= J - config.armijo * step * std::max(0.0, -slope) && J_trial <= J) {
          accepted = true;
          break;
        }
        step *= config.backtrack;
      }
      if (!accepted) {
        // No decrease along the Newton direction: stiffen the model and retry.
        // With heavy regularization as well the iterate is stationary to
        // working precision.
        if (lm < 1e-2) {
          lm *= 100.0;
          continue;
        }
        stage_converged = true;
        break;
      }
      for (auto k : cells) u[k] = trial[k];
      stalls = (J - J_trial <= 1e-13 * std::abs(J)) ? stalls + 1 : 0;
      J = J_trial;
      out.objective_trace.back().push_back(J);
      e = e_trial;
      vol = vol_trial;
      lm = std::max(1e-10, lm * 0.1);
      if (max_step <= config.tolerance * fmax || stalls >= 3) stage_converged = true;
    }

  }
  out.field = std::move(u);
  out.objective = J;
  out.converged = stage_converged;
  out.volume = positive_volume(out.field, inst.domain, inst.positivity_threshold());
  out.energy_root = p_energy_root(out.field, inst.domain, config.p);
  if (!std::isfinite(out.energy_root)) throw ConvergenceError("minimize_penalized: energy is not finite");
  return out;
}

}  // namespace detail

/// Local minimizer of the penalized functional for the given L.
///
/// From a cold start (no initial guess) the solve is chained over p: first
/// min(p, 8) with eps starting at epsilon_start (default max f), then doubling
/// p, each pass warm-started from the previous one with eps restarting at
/// 8h max f. With an initial guess a single pass runs at p, eps starting at
/// epsilon_start (default 8h max f). converged is false when the last stage
/// of the last pass hits max_iters.
inline PSolution minimize_penalized(const Instance& inst, const SolverConfig& config) {
  config.validate();
  const double fmax = inst.f_max();
  const double warm_eps = std::max(8.0 * inst.h() * fmax, config.epsilon_end);
  if (config.initial) {
    if (!(config.initial->grid() == inst.grid)) throw InvalidInput("minimize_penalized: initial guess grid differs");
    return detail::descend(inst, config, *config.initial, config.p,
                           config.epsilon_start > 0.0 ? config.epsilon_start : warm_eps);
  }
  std::vector<double> chain{std::min(config.p, 8.0)};
  while (2.0 * chain.back() < config.p) chain.push_back(2.0 * chain.back());
  if (chain.back() < config.p) chain.push_back(config.p);

  SolverConfig step = config;
  step.p = chain.front();
  PSolution sol = detail::descend(inst, step, ScalarField(inst.grid), std::min(step.p, 4.0),
                                  config.epsilon_start > 0.0 ? config.epsilon_start : fmax);
  int iterations = sol.iterations;
  for (std::size_t c = 1; c < chain.size(); ++c) {
    step.p = chain[c];
    std::vector<std::vector<double>> trace = std::move(sol.objective_trace);
    sol = detail::descend(inst, step, sol.field, step.p, std::min(warm_eps, fmax));
    trace.insert(trace.end(), sol.objective_trace.begin(), sol.objective_trace.end());
    sol.objective_trace = std::move(trace);
    iterations += sol.iterations;
  }
  sol.iterations = iterations;
  return sol;
}

/// Runs minimize_penalized with L = p, 2p, 4p, ... until the volume of the
/// positivity set is within volume_tolerance of alpha.
inline PSolution solve_with_volume_constraint(const Instance& inst, double p, SolverConfig config = {}) {
  config.p = p;
  config.validate();
  const double L_max = config.L_max > 0.0 ? config.L_max : 4096.0 * p;
  const double vol_tol = config.volume_tolerance > 0.0 ? config.volume_tolerance : 4.0 * inst.h();
  std::vector<double> trace;
  for (double L = p; L <= L_max; L *= 2.0) {
    config.L = L;
    PSolution sol = minimize_penalized(inst, config);
    trace.push_back(sol.volume);
    if (sol.volume <= inst.spec.alpha + vol_tol) {
      sol.volume_trace = std::move(trace);
      return sol;
    }
  }
  std::ostringstream os;
  os << "solve_with_volume_constraint: volume constraint " << inst.spec.alpha << " + " << vol_tol
     << " not met for L up to " << L_max << "; volumes:";
  for (double v : trace) os << ' ' << v;
  throw ConvergenceError(os.str());
}

/// -(p-2) Du D^2u Du^T / |Du|^2 - Laplacian(u) by central differences at mask
/// nodes with a 2-cell margin and |Du| > grad_floor.
inline ResidualField p_viscosity_residual(const ScalarField& field, const RegionMask& mask, double p,
                                          double grad_floor = 1e-3) {
  if (!(field.grid() == mask.grid())) throw InvalidInput("p_viscosity_residual: grids differ");
  if (!(p > 1.0)) throw InvalidInput("p_viscosity_residual: p must exceed 1");
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
      const double g2 = d.ux * d.ux + d.uy * d.uy;
      if (std::sqrt(g2) <= grad_floor) {
        ++out.excluded;
        continue;
      }
      const double inf_lap = d.ux * d.ux * d.uxx + 2.0 * d.ux * d.uy * d.uxy + d.uy * d.uy * d.uyy;
      out.values.at(i, j) = -(p - 2.0) * inf_lap / g2 - (d.uxx + d.uyy);
      out.evaluated.set(i, j, true);
    }
  return out;
}

}  // namespace optdesign
