#pragma once
// Run configuration read from a YAML file. Every map is checked against its
// list of known keys and every error carries the line of the offending node.

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "optdesign/errors.hpp"
#include "optdesign/problem.hpp"
#include "optdesign/psolver.hpp"

namespace optdesign {

/// Schema violation in a config file; the message starts with
/// "<source>:<line>: <key path>: ".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& path, const std::string& msg)
      : std::runtime_error(format(source, line, path, msg)), line_(line) {}
  int line() const { return line_; }

 private:
  static std::string format(const std::string& source, int line, const std::string& path, const std::string& msg) {
    std::ostringstream os;
    os << source << ":" << line << ": " << (path.empty() ? "" : path + ": ") << msg;
    return os.str();
  }
  int line_;
};

struct RunConfig {
  bool has_instance = false;  // the render command needs no instance
  ProblemSpec spec;
  int resolution = 128;
  std::vector<double> p_list{8.0, 16.0, 32.0, 64.0};
  SolverConfig solver;
  bool warm_start = true;
  double multiplicity_delta = 0.05;
  std::optional<double> stencil_radius;  // in cells
  bool render_fields = true;
  bool render_overlays = true;
  std::vector<std::string> render_inputs;  // rasters for the render command
  std::optional<double> render_threshold;
};

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& path, const std::string& msg) const {
    const int line = node.Mark().is_null() ? 0 : node.Mark().line + 1;
    throw ConfigError(source_, line, path, msg);
  }

  void require_map(const YAML::Node& node, const std::string& path) const {
    if (!node.IsMap()) fail(node, path, "expected a mapping");
  }

  void check_keys(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> allowed) const {
    require_map(node, path);
    for (const auto& kv : node) {
      const std::string key = kv.first.as<std::string>();
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) {
        std::string list;
        for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
        fail(kv.first, join(path, key), "unknown key (allowed: " + list + ")");
      }
    }
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  double number(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, path, "expected a number");
    try {
      return node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node, path, "expected a number, got '" + node.Scalar() + "'");
    }
  }

  int integer(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, path, "expected an integer");
    try {
      return node.as<int>();
    } catch (const YAML::Exception&) {
      fail(node, path, "expected an integer, got '" + node.Scalar() + "'");
    }
  }

  bool boolean(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, path, "expected true or false");
    try {
      return node.as<bool>();
    } catch (const YAML::Exception&) {
      fail(node, path, "expected true or false, got '" + node.Scalar() + "'");
    }
  }

  std::string text(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, path, "expected a string");
    return node.Scalar();
  }

  Point point(const YAML::Node& node, const std::string& path) const {
    if (!node.IsSequence() || node.size() != 2) fail(node, path, "expected a pair [x, y]");
    return {number(node[0], path + "[0]"), number(node[1], path + "[1]")};
  }

  const YAML::Node child(const YAML::Node& parent, const char* key, const std::string& path) const {
    const YAML::Node n = parent[key];
    if (!n) fail(parent, join(path, key), "missing required key");
    return n;
  }

  DomainSpec domain(const YAML::Node& node, const std::string& path) const {
    require_map(node, path);
    const std::string shape = text(child(node, "shape", path), join(path, "shape"));
    try {
      if (shape == "rectangle") {
        check_keys(node, path, {"shape", "width", "height"});
        return DomainSpec::rectangle(number(child(node, "width", path), join(path, "width")),
                                     number(child(node, "height", path), join(path, "height")));
      }
      if (shape == "disk") {
        check_keys(node, path, {"shape", "radius"});
        return DomainSpec::disk(number(child(node, "radius", path), join(path, "radius")));
      }
      if (shape == "annulus") {
        check_keys(node, path, {"shape", "inner_radius", "outer_radius"});
        return DomainSpec::annulus(number(child(node, "inner_radius", path), join(path, "inner_radius")),
                                   number(child(node, "outer_radius", path), join(path, "outer_radius")));
      }
      if (shape == "polygon") {
        check_keys(node, path, {"shape", "vertices"});
        const YAML::Node vs = child(node, "vertices", path);
        if (!vs.IsSequence()) fail(vs, join(path, "vertices"), "expected a list of [x, y] pairs");
        std::vector<Point> pts;
        for (std::size_t k = 0; k < vs.size(); ++k)
          pts.push_back(point(vs[k], join(path, "vertices") + "[" + std::to_string(k) + "]"));
        return DomainSpec::polygon(std::move(pts));
      }
    } catch (const InvalidInput& e) {
      fail(node, path, e.what());
    }
    fail(node["shape"], join(path, "shape"), "unknown shape '" + shape + "' (rectangle, disk, annulus, polygon)");
  }

  BoundaryFunction boundary_function(const YAML::Node& node, const std::string& path) const {
    require_map(node, path);
    const std::string kind = text(child(node, "kind", path), join(path, "kind"));
    auto num = [&](const char* key) { return number(child(node, key, path), join(path, key)); };
    auto opt = [&](const char* key, double fallback) {
      return node[key] ? number(node[key], join(path, key)) : fallback;
    };
    try {
      if (kind == "constant") {
        check_keys(node, path, {"kind", "value"});
        return BoundaryFunction::constant(num("value"));
      }
      if (kind == "linear") {
        check_keys(node, path, {"kind", "offset", "cx", "cy"});
        return BoundaryFunction::linear(num("offset"), opt("cx", 0.0), opt("cy", 0.0));
      }
      if (kind == "angular_cosine") {
        check_keys(node, path, {"kind", "mean", "amplitude", "frequency"});
        return BoundaryFunction::angular_cosine(num("mean"), num("amplitude"), opt("frequency", 1.0));
      }
      if (kind == "bump") {
        check_keys(node, path, {"kind", "base", "amplitude", "center", "width"});
        return BoundaryFunction::bump(num("base"), num("amplitude"),
                                      point(child(node, "center", path), join(path, "center")), num("width"));
      }
    } catch (const InvalidInput& e) {
      fail(node, path, e.what());
    }
    fail(node["kind"], join(path, "kind"), "unknown kind '" + kind + "' (constant, linear, angular_cosine, bump)");
  }

 private:
  std::string source_;
};

}  // namespace detail

/// Parses a config document. `source` names it in error messages.
inline RunConfig parse_config(const std::string& document, const std::string& source = "<config>") {
  detail::ConfigReader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(document);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source, e.mark.line + 1, "", e.msg);
  }
  if (!root || root.IsNull()) throw ConfigError(source, 1, "", "empty config");
  r.check_keys(root, "", {"instance", "grid", "p_list", "solver", "multiplicity", "render"});

  RunConfig cfg;
  if (const YAML::Node inst = root["instance"]) {
  cfg.has_instance = true;
  r.check_keys(inst, "instance", {"domain", "f", "alpha"});
  cfg.spec.domain = r.domain(r.child(inst, "domain", "instance"), "instance.domain");
  cfg.spec.f = r.boundary_function(r.child(inst, "f", "instance"), "instance.f");
  const YAML::Node alpha = r.child(inst, "alpha", "instance");
  cfg.spec.alpha = r.number(alpha, "instance.alpha");
  const double area = cfg.spec.domain.area();
  if (!(cfg.spec.alpha > 0.0) || !(cfg.spec.alpha < area)) {
    std::ostringstream os;
    os << "must satisfy 0 < alpha < |Omega| = " << area << ", got " << cfg.spec.alpha;
    r.fail(alpha, "instance.alpha", os.str());
  }
  }

  if (const YAML::Node grid = root["grid"]) {
    r.check_keys(grid, "grid", {"resolution"});
    if (grid["resolution"]) {
      cfg.resolution = r.integer(grid["resolution"], "grid.resolution");
      if (cfg.resolution < 8) r.fail(grid["resolution"], "grid.resolution", "must be at least 8");
    }
  }

  if (const YAML::Node ps = root["p_list"]) {
    if (!ps.IsSequence() || ps.size() == 0) r.fail(ps, "p_list", "expected a non-empty list of exponents");
    cfg.p_list.clear();
    for (std::size_t k = 0; k < ps.size(); ++k) {
      const std::string path = "p_list[" + std::to_string(k) + "]";
      const double p = r.number(ps[k], path);
      if (!(p > 2.0)) r.fail(ps[k], path, "exponents must exceed 2");
      cfg.p_list.push_back(p);
    }
  }

  if (const YAML::Node s = root["solver"]) {
    r.check_keys(s, "solver",
                 {"epsilon_start", "epsilon_end", "delta_start", "delta_end", "stages", "max_iters", "tolerance",
                  "armijo", "backtrack", "max_backtracks", "L_max", "volume_tolerance", "warm_start"});
    auto set = [&](const char* key, double& dst) {
      if (s[key]) dst = r.number(s[key], std::string("solver.") + key);
    };
    auto set_int = [&](const char* key, int& dst) {
      if (s[key]) dst = r.integer(s[key], std::string("solver.") + key);
    };
    set("epsilon_start", cfg.solver.epsilon_start);
    set("epsilon_end", cfg.solver.epsilon_end);
    set("delta_start", cfg.solver.delta_start);
    set("delta_end", cfg.solver.delta_end);
    set_int("stages", cfg.solver.stages);
    set_int("max_iters", cfg.solver.max_iters);
    set("tolerance", cfg.solver.tolerance);
    set("armijo", cfg.solver.armijo);
    set("backtrack", cfg.solver.backtrack);
    set_int("max_backtracks", cfg.solver.max_backtracks);
    set("L_max", cfg.solver.L_max);
    set("volume_tolerance", cfg.solver.volume_tolerance);
    if (s["warm_start"]) cfg.warm_start = r.boolean(s["warm_start"], "solver.warm_start");
    try {
      SolverConfig probe = cfg.solver;
      probe.p = 8.0;
      probe.validate();
    } catch (const InvalidInput& e) {
      r.fail(s, "solver", e.what());
    }
  }

  if (const YAML::Node m = root["multiplicity"]) {
    r.check_keys(m, "multiplicity", {"delta", "stencil_radius"});
    if (m["delta"]) {
      cfg.multiplicity_delta = r.number(m["delta"], "multiplicity.delta");
      if (!(cfg.multiplicity_delta > 0.0)) r.fail(m["delta"], "multiplicity.delta", "must be positive");
    }
    if (m["stencil_radius"]) {
      cfg.stencil_radius = r.number(m["stencil_radius"], "multiplicity.stencil_radius");
      if (!(*cfg.stencil_radius >= 2.0))
        r.fail(m["stencil_radius"], "multiplicity.stencil_radius", "must be at least 2 (cells)");
    }
  }

  if (const YAML::Node rd = root["render"]) {
    r.check_keys(rd, "render", {"fields", "overlays", "inputs", "threshold"});
    if (rd["fields"]) cfg.render_fields = r.boolean(rd["fields"], "render.fields");
    if (rd["overlays"]) cfg.render_overlays = r.boolean(rd["overlays"], "render.overlays");
    if (const YAML::Node in = rd["inputs"]) {
      if (!in.IsSequence()) r.fail(in, "render.inputs", "expected a list of raster paths");
      for (std::size_t k = 0; k < in.size(); ++k)
        cfg.render_inputs.push_back(r.text(in[k], "render.inputs[" + std::to_string(k) + "]"));
    }
    if (rd["threshold"]) {
      cfg.render_threshold = r.number(rd["threshold"], "render.threshold");
      if (!(*cfg.render_threshold > 0.0)) r.fail(rd["threshold"], "render.threshold", "must be positive");
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace optdesign
