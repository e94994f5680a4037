#pragma once
// Reproducible experiments: the p-sweep against the limit solution, the
// multiplicity construction when the compatibility condition fails, and the
// energy comparison between the volume budgets alpha and |D|.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "optdesign/freeboundary.hpp"
#include "optdesign/infinity.hpp"
#include "optdesign/limit.hpp"
#include "optdesign/psolver.hpp"

namespace optdesign {

inline constexpr const char* kVersion = "optdesign 1.0.0";

struct ReportMetadata {
  double h = 0.0;
  int resolution = 0;
  std::string domain;
  std::string f;
  double alpha = 0.0;
  double domain_measure = 0.0;
  bool convex_domain = true;
  std::string version = kVersion;

  friend bool operator==(const ReportMetadata&, const ReportMetadata&) = default;
};

struct LimitRow {
  double lambda = 0.0;  // lambda* under the compatibility condition, Lip(f) otherwise
  double lip_f = 0.0;
  bool condition_H = false;
  double achieved_volume = 0.0;
  double lip_psi = 0.0;  // discrete Lipschitz constant of psi

  friend bool operator==(const LimitRow&, const LimitRow&) = default;
};

struct SweepRow {
  double p = 0.0;
  bool failed = false;
  std::string error;  // set when failed; the numeric fields are then left at 0
  double L_used = 0.0;
  double energy_root = 0.0;
  double max_grad = 0.0;
  double volume = 0.0;
  double hausdorff_to_limit = 0.0;
  double lambda_p_estimate = 0.0;
  double sup_norm_error_vs_psi = 0.0;
  double gamma_growth = 0.0;
  double gamma_sup = 0.0;
  int iterations = 0;
  bool converged = false;

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct ExperimentReport {
  ReportMetadata metadata;
  LimitRow limit;
  std::vector<SweepRow> rows;  // sorted by p

  friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

using Json = nlohmann::ordered_json;

inline Json to_json(const ExperimentReport& r) {
  Json j;
  const auto& m = r.metadata;
  j["metadata"] = {{"h", m.h},
                   {"resolution", m.resolution},
                   {"domain", m.domain},
                   {"f", m.f},
                   {"alpha", m.alpha},
                   {"domain_measure", m.domain_measure},
                   {"convex_domain", m.convex_domain},
                   {"version", m.version}};
  j["limit"] = {{"lambda", r.limit.lambda},
                {"lip_f", r.limit.lip_f},
                {"condition_H", r.limit.condition_H},
                {"achieved_volume", r.limit.achieved_volume},
                {"lip_psi", r.limit.lip_psi}};
  j["rows"] = Json::array();
  for (const auto& row : r.rows) {
    Json o;
    o["p"] = row.p;
    if (row.failed) {
      o["failed"] = true;
      o["error"] = row.error;
    } else {
      o["L_used"] = row.L_used;
      o["energy_root"] = row.energy_root;
      o["max_grad"] = row.max_grad;
      o["volume"] = row.volume;
      o["hausdorff_to_limit"] = row.hausdorff_to_limit;
      o["lambda_p_estimate"] = row.lambda_p_estimate;
      o["sup_norm_error_vs_psi"] = row.sup_norm_error_vs_psi;
      o["gamma_growth"] = row.gamma_growth;
      o["gamma_sup"] = row.gamma_sup;
      o["iterations"] = row.iterations;
      o["converged"] = row.converged;
    }
    j["rows"].push_back(std::move(o));
  }
  return j;
}

inline ExperimentReport report_from_json(const Json& j) {
  ExperimentReport r;
  const auto& m = j.at("metadata");
  r.metadata.h = m.at("h").get<double>();
  r.metadata.resolution = m.at("resolution").get<int>();
  r.metadata.domain = m.at("domain").get<std::string>();
  r.metadata.f = m.at("f").get<std::string>();
  r.metadata.alpha = m.at("alpha").get<double>();
  r.metadata.domain_measure = m.at("domain_measure").get<double>();
  r.metadata.convex_domain = m.at("convex_domain").get<bool>();
  r.metadata.version = m.at("version").get<std::string>();
  const auto& l = j.at("limit");
  r.limit.lambda = l.at("lambda").get<double>();
  r.limit.lip_f = l.at("lip_f").get<double>();
  r.limit.condition_H = l.at("condition_H").get<bool>();
  r.limit.achieved_volume = l.at("achieved_volume").get<double>();
  r.limit.lip_psi = l.at("lip_psi").get<double>();
  for (const auto& o : j.at("rows")) {
    SweepRow row;
    row.p = o.at("p").get<double>();
    if (o.value("failed", false)) {
      row.failed = true;
      row.error = o.at("error").get<std::string>();
    } else {
      row.L_used = o.at("L_used").get<double>();
      row.energy_root = o.at("energy_root").get<double>();
      row.max_grad = o.at("max_grad").get<double>();
      row.volume = o.at("volume").get<double>();
      row.hausdorff_to_limit = o.at("hausdorff_to_limit").get<double>();
      row.lambda_p_estimate = o.at("lambda_p_estimate").get<double>();
      row.sup_norm_error_vs_psi = o.at("sup_norm_error_vs_psi").get<double>();
      row.gamma_growth = o.at("gamma_growth").get<double>();
      row.gamma_sup = o.at("gamma_sup").get<double>();
      row.iterations = o.at("iterations").get<int>();
      row.converged = o.at("converged").get<bool>();
    }
    r.rows.push_back(std::move(row));
  }
  return r;
}

inline ReportMetadata make_metadata(const Instance& inst) {
  ReportMetadata m;
  m.h = inst.h();
  m.resolution = inst.resolution;
  m.domain = inst.spec.domain.describe();
  m.f = inst.spec.f.describe();
  m.alpha = inst.spec.alpha;
  m.domain_measure = inst.domain_measure();
  m.convex_domain = inst.spec.domain.is_convex();
  return m;
}

/// Radii for the sup-growth check: 4h, 8h, 16h.
inline std::vector<double> default_radii(double h) { return {4.0 * h, 8.0 * h, 16.0 * h}; }

/// Largest |u - v| over the cells of `mask`.
inline double sup_distance(const ScalarField& u, const ScalarField& v, const RegionMask& mask) {
  double out = 0.0;
  for (std::size_t k = 0; k < mask.size(); ++k)
    if (mask[k]) out = std::max(out, std::abs(u[k] - v[k]));
  return out;
}

struct SweepOutput {
  ExperimentReport report;
  LimitSolution limit;
  std::vector<std::optional<ScalarField>> fields;  // one per row, empty for failed rows
};

struct SweepOptions {
  SolverConfig solver;
  bool warm_start = true;  // start each p from the previous successful solution
};

/// Solves the volume-constrained problem for every p (ascending) on one grid
/// and compares each solution with the limit solution. A row whose solve
/// fails records the error and the sweep moves on.
inline SweepOutput run_p_sweep(const ProblemSpec& spec, std::vector<double> p_list, int resolution,
                               const SweepOptions& options = {}) {
  if (p_list.empty()) throw InvalidInput("run_p_sweep: p list is empty");
  std::sort(p_list.begin(), p_list.end());
  if (std::adjacent_find(p_list.begin(), p_list.end()) != p_list.end())
    throw InvalidInput("run_p_sweep: p values must be distinct");
  const Instance inst = discretize(spec, resolution);
  SweepOutput out;
  out.limit = solve_limit(inst);
  const double theta = inst.positivity_threshold();
  const BoundarySet limit_fb = extract_free_boundary(out.limit.field, inst.domain, theta);

  out.report.metadata = make_metadata(inst);
  out.report.limit = {out.limit.lambda, out.limit.lip_f, out.limit.condition_H, out.limit.achieved_volume,
                      discrete_lipschitz(out.limit.field, inst.domain).value()};

  std::optional<ScalarField> previous;
  for (double p : p_list) {
    SweepRow row;
    row.p = p;
    try {
      SolverConfig cfg = options.solver;
      if (options.warm_start && previous) cfg.initial = previous;
      PSolution sol = solve_with_volume_constraint(inst, p, cfg);
      const BoundarySet fb = extract_free_boundary(sol.field, inst.domain, theta);
      const Nondegeneracy nd = nondegeneracy_check(sol.field, fb, inst.domain, default_radii(inst.h()), theta);
      row.L_used = sol.L_used;
      row.energy_root = sol.energy_root;
      row.max_grad = discrete_lipschitz(sol.field, inst.domain, true, 0).local;
      row.volume = sol.volume;
      row.hausdorff_to_limit = hausdorff_distance(fb, limit_fb);
      row.lambda_p_estimate = slope_estimate(sol.field, fb, inst.domain, theta);
      row.sup_norm_error_vs_psi = sup_distance(sol.field, out.limit.field, inst.domain);
      row.gamma_growth = nd.gamma_growth;
      row.gamma_sup = nd.gamma_sup;
      row.iterations = sol.iterations;
      row.converged = sol.converged;
      previous = sol.field;
      out.fields.emplace_back(std::move(sol.field));
    } catch (const std::exception& e) {
      row = SweepRow{};
      row.p = p;
      row.failed = true;
      row.error = e.what();
      out.fields.emplace_back(std::nullopt);
    }
    out.report.rows.push_back(std::move(row));
  }
  return out;
}

struct MultiplicityReport {
  double lip_f = 0.0;
  double lip_psi = 0.0;
  double lip_v = 0.0;
  double measure_D = 0.0;
  double measure_D_delta = 0.0;
  double delta = 0.0;  // inflation actually used
  double alpha = 0.0;
  double theta_pos = 0.0;
  double min_v_minus_psi = 0.0;
  double sup_v_minus_psi = 0.0;
  int sweeps = 0;
};

struct MultiplicityOutput {
  MultiplicityReport report;
  LimitSolution limit;   // minimal solution psi on D
  ScalarField v;         // infinity-harmonic solution on D_delta
  RegionMask D_delta;
};

/// Stencil for the multiplicity solve: 4h. At 3h the angular error of the
/// scheme on the cones of psi is about h/10 near the peak of steep data.
inline InfinitySolverOptions multiplicity_solver_options(double h) {
  InfinitySolverOptions o;
  o.stencil_radius = 4.0 * h;
  return o;
}

/// D is Omega_{Lip(f)}; D_delta is D dilated by delta inside the domain, with
/// delta halved until |D_delta| < alpha. The infinity-harmonic solution v
/// takes the data f on the domain's boundary layer, extended a half cell
/// inward by max_y (f(y) - Lip(f)|x - y|), and 0 on the rest of the domain
/// outside D_delta.
inline MultiplicityOutput run_multiplicity(const ProblemSpec& spec, int resolution, double delta,
                                           std::optional<InfinitySolverOptions> inf_opts = std::nullopt) {
  if (!(delta > 0.0)) throw InvalidInput("run_multiplicity: delta must be positive");
  const Instance inst = discretize(spec, resolution);
  MultiplicityOutput out;
  out.limit = solve_limit(inst);
  if (out.limit.condition_H)
    throw InvalidInput("run_multiplicity: the compatibility condition holds, so the minimizer is unique");
  const double alpha = spec.alpha;
  const double h = inst.h();
  RegionMask D_delta = dilate(out.limit.region, delta) & inst.domain;
  while (measure(D_delta) >= alpha) {
    delta *= 0.5;
    if (delta < h) throw InvalidInput("run_multiplicity: no admissible delta; D already fills the volume budget");
    D_delta = dilate(out.limit.region, delta) & inst.domain;
  }
  const ScalarField data = lipschitz_extension(inst.boundary, out.limit.lip_f, inst.grid);
  const auto solved = solve_infinity_harmonic(make_boundary_layer_problem(D_delta, inst.domain, data),
                                              inf_opts.value_or(multiplicity_solver_options(h)));
  out.v = solved.field;
  out.D_delta = D_delta;

  auto& r = out.report;
  r.lip_f = out.limit.lip_f;
  r.lip_psi = discrete_lipschitz(out.limit.field, inst.domain).value();
  r.lip_v = discrete_lipschitz(out.v, inst.domain).value();
  r.measure_D = measure(out.limit.region);
  r.measure_D_delta = measure(D_delta);
  r.delta = delta;
  r.alpha = alpha;
  r.theta_pos = inst.positivity_threshold();
  r.min_v_minus_psi = std::numeric_limits<double>::infinity();
  r.sup_v_minus_psi = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < out.v.size(); ++k) {
    if (!inst.domain[k]) continue;
    const double d = out.v[k] - out.limit.field[k];
    r.min_v_minus_psi = std::min(r.min_v_minus_psi, d);
    r.sup_v_minus_psi = std::max(r.sup_v_minus_psi, d);
  }
  r.sweeps = solved.sweeps;
  return out;
}

struct EnergyGapRow {
  double p = 0.0;
  double energy_alpha = 0.0;  // energy root of the solution with budget alpha
  double energy_beta = 0.0;   // same with budget beta = |D|
  double gap = 0.0;
  double relative_gap = 0.0;  // gap / energy_alpha
};

struct EnergyEquivalenceReport {
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<EnergyGapRow> rows;
};

/// Energy roots of the volume-constrained problems with budgets alpha and
/// beta = |D| < alpha, for each p (ascending, warm-started per budget).
inline EnergyEquivalenceReport run_energy_equivalence(const ProblemSpec& spec, std::vector<double> p_list,
                                                      int resolution, const SweepOptions& options = {}) {
  if (p_list.empty()) throw InvalidInput("run_energy_equivalence: p list is empty");
  std::sort(p_list.begin(), p_list.end());
  const Instance inst_alpha = discretize(spec, resolution);
  const LimitSolution lim = solve_limit(inst_alpha);
  if (lim.condition_H)
    throw InvalidInput("run_energy_equivalence: the compatibility condition holds; there is no smaller budget |D|");
  EnergyEquivalenceReport out;
  out.alpha = spec.alpha;
  out.beta = measure(lim.region);
  if (!(out.beta < out.alpha)) throw InvalidInput("run_energy_equivalence: |D| is not below alpha");
  ProblemSpec spec_beta = spec;
  spec_beta.alpha = out.beta;
  const Instance inst_beta = discretize(spec_beta, resolution);

  std::optional<ScalarField> prev_a, prev_b;
  for (double p : p_list) {
    SolverConfig ca = options.solver, cb = options.solver;
    if (options.warm_start) {
      ca.initial = prev_a;
      cb.initial = prev_b;
    }
    const PSolution a = solve_with_volume_constraint(inst_alpha, p, ca);
    const PSolution b = solve_with_volume_constraint(inst_beta, p, cb);
    prev_a = a.field;
    prev_b = b.field;
    EnergyGapRow row;
    row.p = p;
    row.energy_alpha = a.energy_root;
    row.energy_beta = b.energy_root;
    row.gap = std::abs(a.energy_root - b.energy_root);
    row.relative_gap = a.energy_root > 0.0 ? row.gap / a.energy_root : 0.0;
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace optdesign
