// optdesign command-line tool: limit | sweep | multiplicity | render.
//
// Exit codes: 0 success, 2 config error, 3 I/O error, 4 solver non-convergence.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "optdesign/config.hpp"
#include "optdesign/experiments.hpp"
#include "optdesign/io.hpp"

namespace od = optdesign;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kIoError = 3;
constexpr int kNoConvergence = 4;

std::string p_tag(double p) {
  std::ostringstream os;
  os << p;
  return os.str();
}

// The free boundary of a field, or an empty set when the field has none.
od::BoundarySet free_boundary_or_empty(const od::ScalarField& u, const od::RegionMask& mask, double theta) {
  try {
    return od::extract_free_boundary(u, mask, theta);
  } catch (const od::InvalidInput&) {
    return {};
  }
}

od::Json limit_json(const od::Instance& inst, const od::LimitSolution& lim) {
  od::Json j;
  j["lambda"] = lim.lambda;
  j["lip_f"] = lim.lip_f;
  j["condition_H"] = lim.condition_H;
  j["achieved_volume"] = lim.achieved_volume;
  j["covered_volume_at_lip_f"] = lim.covered_volume_at_lip;
  j["convex_domain"] = lim.convex_domain;
  j["alpha"] = inst.spec.alpha;
  j["h"] = inst.h();
  j["resolution"] = inst.resolution;
  j["domain"] = inst.spec.domain.describe();
  j["f"] = inst.spec.f.describe();
  j["version"] = od::kVersion;
  return j;
}

int cmd_limit(const od::RunConfig& cfg, const fs::path& out) {
  const od::Instance inst = od::discretize(cfg.spec, cfg.resolution);
  const od::LimitSolution lim = od::solve_limit(inst);
  od::ensure_directory(out);
  od::write_json(limit_json(inst, lim), out / "limit.json");
  if (cfg.render_fields) od::write_raster(lim.field, out / "psi.pgm");
  if (cfg.render_overlays)
    od::write_overlay(inst.grid,
                      {{"domain", od::OverlayRole::domain, od::mask_outline(inst.domain)},
                       {"psi", od::OverlayRole::limit,
                        free_boundary_or_empty(lim.field, inst.domain, inst.positivity_threshold())}},
                      out / "limit_overlay.svg");
  std::cout << "lambda = " << lim.lambda << ", Lip(f) = " << lim.lip_f
            << ", condition (H) " << (lim.condition_H ? "holds" : "fails")
            << ", volume = " << lim.achieved_volume << "\n";
  return kOk;
}

int cmd_sweep(const od::RunConfig& cfg, const fs::path& out) {
  od::SweepOptions opts{cfg.solver, cfg.warm_start};
  const od::SweepOutput sw = od::run_p_sweep(cfg.spec, cfg.p_list, cfg.resolution, opts);
  const od::Instance inst = od::discretize(cfg.spec, cfg.resolution);
  const double theta = inst.positivity_threshold();
  od::ensure_directory(out);
  od::write_json(od::to_json(sw.report), out / "report.json");
  od::write_convergence_csv(sw.report, out / "convergence.csv");
  if (cfg.render_fields) od::write_raster(sw.limit.field, out / "psi.pgm");
  const od::BoundarySet limit_fb = free_boundary_or_empty(sw.limit.field, inst.domain, theta);
  int failed = 0;
  for (std::size_t r = 0; r < sw.report.rows.size(); ++r) {
    const auto& row = sw.report.rows[r];
    if (row.failed) {
      ++failed;
      std::cerr << "p = " << row.p << ": " << row.error << "\n";
      continue;
    }
    const od::ScalarField& u = *sw.fields[r];
    const std::string tag = p_tag(row.p);
    if (cfg.render_fields) od::write_raster(u, out / ("u_p" + tag + ".pgm"));
    if (cfg.render_overlays)
      od::write_overlay(inst.grid,
                        {{"domain", od::OverlayRole::domain, od::mask_outline(inst.domain)},
                         {"psi", od::OverlayRole::limit, limit_fb},
                         {"u_p" + tag, od::OverlayRole::solution, free_boundary_or_empty(u, inst.domain, theta)}},
                        out / ("overlay_p" + tag + ".svg"));
    std::cout << "p = " << row.p << ": sup|u_p - psi| = " << row.sup_norm_error_vs_psi
              << ", hausdorff = " << row.hausdorff_to_limit << ", lambda_p = " << row.lambda_p_estimate << "\n";
  }
  if (failed > 0) {
    std::cerr << failed << " of " << sw.report.rows.size() << " solves did not converge\n";
    return kNoConvergence;
  }
  return kOk;
}

int cmd_multiplicity(const od::RunConfig& cfg, const fs::path& out) {
  {
    const od::Instance inst = od::discretize(cfg.spec, cfg.resolution);
    const auto cond = od::check_condition_H(inst.boundary, inst.domain, cfg.spec.alpha);
    if (cond.holds) {
      std::cerr << "multiplicity: condition (H) holds for this instance (|Omega_Lip(f)| = " << cond.covered_volume
                << " >= alpha = " << cfg.spec.alpha
                << "), so the limit minimizer is unique; choose data with Lip(f) large enough that the balls "
                   "B_{f(y)/Lip(f)}(y) cover less than alpha\n";
      return kConfigError;
    }
  }
  std::optional<od::InfinitySolverOptions> inf;
  const od::Instance inst = od::discretize(cfg.spec, cfg.resolution);
  if (cfg.stencil_radius) {
    inf = od::InfinitySolverOptions{};
    inf->stencil_radius = *cfg.stencil_radius * inst.h();
  }
  const od::MultiplicityOutput mu = od::run_multiplicity(cfg.spec, cfg.resolution, cfg.multiplicity_delta, inf);
  const od::EnergyEquivalenceReport eq =
      od::run_energy_equivalence(cfg.spec, cfg.p_list, cfg.resolution, {cfg.solver, cfg.warm_start});

  od::ensure_directory(out);
  const auto& r = mu.report;
  od::Json j;
  j["lip_f"] = r.lip_f;
  j["lip_psi"] = r.lip_psi;
  j["lip_v"] = r.lip_v;
  j["measure_D"] = r.measure_D;
  j["measure_D_delta"] = r.measure_D_delta;
  j["delta"] = r.delta;
  j["alpha"] = r.alpha;
  j["theta_pos"] = r.theta_pos;
  j["min_v_minus_psi"] = r.min_v_minus_psi;
  j["sup_v_minus_psi"] = r.sup_v_minus_psi;
  j["sweeps"] = r.sweeps;
  j["energy_equivalence"] = {{"alpha", eq.alpha}, {"beta", eq.beta}, {"rows", od::Json::array()}};
  for (const auto& row : eq.rows)
    j["energy_equivalence"]["rows"].push_back({{"p", row.p},
                                               {"energy_alpha", row.energy_alpha},
                                               {"energy_beta", row.energy_beta},
                                               {"gap", row.gap},
                                               {"relative_gap", row.relative_gap}});
  j["h"] = inst.h();
  j["resolution"] = inst.resolution;
  j["domain"] = inst.spec.domain.describe();
  j["f"] = inst.spec.f.describe();
  j["version"] = od::kVersion;
  od::write_json(j, out / "multiplicity.json");
  if (cfg.render_fields) {
    od::write_raster(mu.limit.field, out / "psi.pgm");
    od::write_raster(mu.v, out / "v_inf.pgm");
  }
  if (cfg.render_overlays)
    od::write_overlay(inst.grid,
                      {{"domain", od::OverlayRole::domain, od::mask_outline(inst.domain)},
                       {"D", od::OverlayRole::limit, od::mask_outline(mu.limit.region)},
                       {"D_delta", od::OverlayRole::auxiliary, od::mask_outline(mu.D_delta)}},
                      out / "multiplicity_overlay.svg");
  std::cout << "Lip(f) = " << r.lip_f << ", Lip(psi) = " << r.lip_psi << ", Lip(v) = " << r.lip_v
            << ", min(v - psi) = " << r.min_v_minus_psi << ", sup(v - psi) = " << r.sup_v_minus_psi << "\n";
  for (const auto& row : eq.rows) std::cout << "p = " << row.p << ": energy gap = " << row.gap << "\n";
  return kOk;
}

int cmd_render(const od::RunConfig& cfg, const fs::path& out) {
  if (cfg.render_inputs.empty()) throw od::ConfigError("config", 0, "render.inputs", "no rasters listed");
  od::ensure_directory(out);
  std::vector<od::OverlaySet> sets;
  std::optional<od::Grid> grid;
  for (const auto& in : cfg.render_inputs) {
    const od::ScalarField u = od::read_raster(in);
    if (grid && !(*grid == u.grid())) throw od::IoError("render: " + in + " is on a different grid");
    grid = u.grid();
    double max_value = 0.0;
    for (double v : u.values()) max_value = std::max(max_value, v);
    const double theta = cfg.render_threshold.value_or(u.grid().h * max_value / 10.0);
    const std::string stem = fs::path(in).stem().string();
    od::write_raster(u, out / (stem + ".pgm"));
    sets.push_back({stem, sets.empty() ? od::OverlayRole::limit : od::OverlayRole::solution,
                    free_boundary_or_empty(u, od::RegionMask(u.grid(), true), theta)});
  }
  od::write_overlay(*grid, sets, out / "overlay.svg");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volume-constrained p-Dirichlet design problems and their p -> infinity limit"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  auto add = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "YAML run configuration")->required();
    sub->add_option("--out", out_dir, "output directory (created if missing)")->required();
    return sub;
  };
  auto* limit = add("limit", "lambda*, condition (H) and the limit minimizer psi");
  auto* sweep = add("sweep", "p-sweep of the penalized problem against the limit");
  auto* multi = add("multiplicity", "second minimizer and energy comparison when (H) fails");
  auto* render = add("render", "re-render rasters and their free boundaries");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    const od::RunConfig cfg = od::load_config(config_path);
    if (!render->parsed() && !cfg.has_instance)
      throw od::ConfigError(config_path, 1, "instance", "missing required section");
    if (limit->parsed()) return cmd_limit(cfg, out_dir);
    if (sweep->parsed()) return cmd_sweep(cfg, out_dir);
    if (multi->parsed()) return cmd_multiplicity(cfg, out_dir);
    return cmd_render(cfg, out_dir);
  } catch (const od::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const od::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const od::ConvergenceError& e) {
    std::cerr << "no convergence: " << e.what() << "\n";
    return kNoConvergence;
  } catch (const od::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
