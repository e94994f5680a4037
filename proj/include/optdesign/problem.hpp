#pragma once

#include <cmath>
#include <sstream>
#include <string>

#include "optdesign/geometry.hpp"

namespace optdesign {

/// The instance (Omega, f, alpha) of the volume-constrained design problem.
struct ProblemSpec {
  DomainSpec domain = DomainSpec::rectangle(1.0, 1.0);
  BoundaryFunction f = BoundaryFunction::constant(1.0);
  double alpha = 0.5;
};

/// A ProblemSpec fixed on a grid: raster of Omega, boundary samples at
/// spacing h/2, and the datum extended to every cell outside Omega by the
/// nearest sample (the values pinned on the boundary ring).
struct Instance {
  ProblemSpec spec;
  Grid grid;
  RegionMask domain;
  BoundaryData boundary;
  ScalarField exterior_values;
  int resolution = 0;

  double h() const { return grid.h; }
  double domain_measure() const { return measure(domain); }
  double f_max() const { return boundary.max_value(); }
  /// Threshold separating {u > 0} from descent noise.
  double positivity_threshold() const { return grid.h * f_max() / 10.0; }
  /// Boundary length estimated from the raster (count of inner boundary cells times h).
  double perimeter_estimate() const { return static_cast<double>(inner_boundary(domain).count()) * grid.h; }
};

inline int boundary_sample_count(const DomainSpec& domain, double h) {
  return std::max(16, static_cast<int>(std::ceil(domain.perimeter() / (0.5 * h))));
}

inline Instance discretize(const ProblemSpec& spec, int resolution) {
  Raster r = rasterize(spec.domain, resolution);
  Instance inst;
  inst.spec = spec;
  inst.grid = r.grid;
  inst.domain = std::move(r.mask);
  inst.resolution = resolution;
  const double full = measure(inst.domain);
  if (!(spec.alpha > 0.0) || !(spec.alpha < full)) {
    std::ostringstream os;
    os << "alpha must satisfy 0 < alpha < |Omega| (= " << full << " on this grid), got " << spec.alpha;
    throw InvalidInput(os.str());
  }
  inst.boundary = sample_boundary(spec.domain, spec.f, boundary_sample_count(spec.domain, inst.grid.h));
  inst.exterior_values = nearest_sample_values(inst.boundary, inst.grid);
  return inst;
}

}  // namespace optdesign
