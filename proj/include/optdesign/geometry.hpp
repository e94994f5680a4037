#pragma once
// Domains, rasters and the region/field carriers shared by every module.
//
// Fields and masks live on cell centers of a uniform grid: value k of a
// field is attached to the center of cell (i, j) with k = j * nx + i.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "optdesign/errors.hpp"
#include "optdesign/parallel.hpp"

namespace optdesign {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct BoundingBox {
  Point lo;
  Point hi;
  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
};

//----------------------------------------------------------------------------
// DomainSpec
//----------------------------------------------------------------------------

/// A bounded planar domain. Rectangles sit on [0,w]x[0,h]; disks and annuli
/// are centered at the origin; polygons are stored counter-clockwise.
class DomainSpec {
 public:
  enum class Shape { rectangle, disk, annulus, polygon };

  static DomainSpec rectangle(double width, double height) {
    if (!(width > 0.0) || !(height > 0.0) || !std::isfinite(width) || !std::isfinite(height))
      throw InvalidInput("rectangle: width and height must be positive");
    DomainSpec d(Shape::rectangle);
    d.a_ = width;
    d.b_ = height;
    return d;
  }

  static DomainSpec disk(double radius) {
    if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidInput("disk: radius must be positive");
    DomainSpec d(Shape::disk);
    d.a_ = radius;
    return d;
  }

  static DomainSpec annulus(double r_in, double r_out) {
    if (!(r_in > 0.0) || !(r_out > r_in) || !std::isfinite(r_out))
      throw InvalidInput("annulus: need 0 < r_in < r_out");
    DomainSpec d(Shape::annulus);
    d.a_ = r_in;
    d.b_ = r_out;
    return d;
  }

  static DomainSpec polygon(std::vector<Point> vertices) {
    if (vertices.size() < 3) throw InvalidInput("polygon: need at least 3 vertices");
    for (const auto& v : vertices)
      if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw InvalidInput("polygon: non-finite vertex");
    double twice_area = 0.0;
    for (std::size_t k = 0; k < vertices.size(); ++k) {
      const Point& p = vertices[k];
      const Point& q = vertices[(k + 1) % vertices.size()];
      twice_area += p.x * q.y - q.x * p.y;
    }
    if (std::abs(twice_area) <= 1e-14) throw InvalidInput("polygon: zero area");
    if (twice_area < 0.0) std::reverse(vertices.begin(), vertices.end());
    if (!is_simple(vertices)) throw InvalidInput("polygon: edges self-intersect");
    DomainSpec d(Shape::polygon);
    d.vertices_ = std::move(vertices);
    return d;
  }

  Shape shape() const { return shape_; }
  double width() const { return a_; }
  double height() const { return b_; }
  double radius() const { return a_; }
  double inner_radius() const { return a_; }
  double outer_radius() const { return b_; }
  const std::vector<Point>& vertices() const { return vertices_; }

  bool contains(Point p) const {
    switch (shape_) {
      case Shape::rectangle:
        return p.x >= 0.0 && p.x <= a_ && p.y >= 0.0 && p.y <= b_;
      case Shape::disk:
        return p.x * p.x + p.y * p.y <= a_ * a_;
      case Shape::annulus: {
        const double r2 = p.x * p.x + p.y * p.y;
        return r2 >= a_ * a_ && r2 <= b_ * b_;
      }
      case Shape::polygon: {
        bool in = false;
        const std::size_t n = vertices_.size();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
          const Point& a = vertices_[i];
          const Point& b = vertices_[j];
          if ((a.y > p.y) != (b.y > p.y)) {
            const double xc = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if (p.x < xc) in = !in;
          }
        }
        return in;
      }
    }
    return false;
  }

  double area() const {
    switch (shape_) {
      case Shape::rectangle: return a_ * b_;
      case Shape::disk: return std::numbers::pi * a_ * a_;
      case Shape::annulus: return std::numbers::pi * (b_ * b_ - a_ * a_);
      case Shape::polygon: {
        double twice = 0.0;
        for (std::size_t k = 0; k < vertices_.size(); ++k) {
          const Point& p = vertices_[k];
          const Point& q = vertices_[(k + 1) % vertices_.size()];
          twice += p.x * q.y - q.x * p.y;
        }
        return 0.5 * twice;
      }
    }
    return 0.0;
  }

  double perimeter() const {
    switch (shape_) {
      case Shape::rectangle: return 2.0 * (a_ + b_);
      case Shape::disk: return 2.0 * std::numbers::pi * a_;
      case Shape::annulus: return 2.0 * std::numbers::pi * (a_ + b_);
      case Shape::polygon: {
        double len = 0.0;
        for (std::size_t k = 0; k < vertices_.size(); ++k)
          len += distance(vertices_[k], vertices_[(k + 1) % vertices_.size()]);
        return len;
      }
    }
    return 0.0;
  }

  /// Point at arc length s along the boundary, s taken modulo the perimeter.
  /// Rectangles start at the origin and run counter-clockwise; annuli run the
  /// outer circle first, then the inner one.
  Point boundary_point(double s) const {
    const double per = perimeter();
    s = std::fmod(s, per);
    if (s < 0.0) s += per;
    switch (shape_) {
      case Shape::rectangle: {
        if (s < a_) return {s, 0.0};
        s -= a_;
        if (s < b_) return {a_, s};
        s -= b_;
        if (s < a_) return {a_ - s, b_};
        s -= a_;
        return {0.0, b_ - s};
      }
      case Shape::disk: {
        const double t = s / a_;
        return {a_ * std::cos(t), a_ * std::sin(t)};
      }
      case Shape::annulus: {
        const double outer = 2.0 * std::numbers::pi * b_;
        if (s < outer) {
          const double t = s / b_;
          return {b_ * std::cos(t), b_ * std::sin(t)};
        }
        const double t = (s - outer) / a_;
        return {a_ * std::cos(t), a_ * std::sin(t)};
      }
      case Shape::polygon: {
        for (std::size_t k = 0; k < vertices_.size(); ++k) {
          const Point& p = vertices_[k];
          const Point& q = vertices_[(k + 1) % vertices_.size()];
          const double len = distance(p, q);
          if (s <= len || k + 1 == vertices_.size()) {
            const double t = std::clamp(s / len, 0.0, 1.0);
            return {p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
          }
          s -= len;
        }
        return vertices_.front();
      }
    }
    return {};
  }

  BoundingBox bbox() const {
    switch (shape_) {
      case Shape::rectangle: return {{0.0, 0.0}, {a_, b_}};
      case Shape::disk: return {{-a_, -a_}, {a_, a_}};
      case Shape::annulus: return {{-b_, -b_}, {b_, b_}};
      case Shape::polygon: {
        BoundingBox box{vertices_.front(), vertices_.front()};
        for (const auto& v : vertices_) {
          box.lo.x = std::min(box.lo.x, v.x);
          box.lo.y = std::min(box.lo.y, v.y);
          box.hi.x = std::max(box.hi.x, v.x);
          box.hi.y = std::max(box.hi.y, v.y);
        }
        return box;
      }
    }
    return {};
  }

  /// Annuli count as nonconvex (chords through the hole leave the domain).
  bool is_convex() const {
    if (shape_ == Shape::annulus) return false;
    if (shape_ != Shape::polygon) return true;
    const std::size_t n = vertices_.size();
    for (std::size_t k = 0; k < n; ++k) {
      const Point& a = vertices_[k];
      const Point& b = vertices_[(k + 1) % n];
      const Point& c = vertices_[(k + 2) % n];
      const double cross = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x);
      if (cross < -1e-12) return false;
    }
    return true;
  }

  std::string describe() const {
    std::ostringstream os;
    switch (shape_) {
      case Shape::rectangle: os << "rectangle(" << a_ << "," << b_ << ")"; break;
      case Shape::disk: os << "disk(" << a_ << ")"; break;
      case Shape::annulus: os << "annulus(" << a_ << "," << b_ << ")"; break;
      case Shape::polygon: os << "polygon(" << vertices_.size() << " vertices)"; break;
    }
    return os.str();
  }

 private:
  explicit DomainSpec(Shape s) : shape_(s) {}

  static bool segments_cross(Point p1, Point p2, Point q1, Point q2) {
    auto orient = [](Point a, Point b, Point c) {
      const double v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
      return (v > 1e-15) - (v < -1e-15);
    };
    auto on_segment = [](Point a, Point b, Point c) {
      return std::min(a.x, b.x) - 1e-15 <= c.x && c.x <= std::max(a.x, b.x) + 1e-15 &&
             std::min(a.y, b.y) - 1e-15 <= c.y && c.y <= std::max(a.y, b.y) + 1e-15;
    };
    const int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
    const int o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(p1, p2, q1)) return true;
    if (o2 == 0 && on_segment(p1, p2, q2)) return true;
    if (o3 == 0 && on_segment(q1, q2, p1)) return true;
    if (o4 == 0 && on_segment(q1, q2, p2)) return true;
    return false;
  }

  static bool is_simple(const std::vector<Point>& v) {
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        // adjacent edges share a vertex by construction
        if (j == i + 1 || (i == 0 && j == n - 1)) continue;
        if (segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n])) return false;
      }
    }
    return true;
  }

  Shape shape_;
  double a_ = 0.0;
  double b_ = 0.0;
  std::vector<Point> vertices_;
};

//----------------------------------------------------------------------------
// Grid, masks, fields
//----------------------------------------------------------------------------

struct Grid {
  Point origin;  // lower-left corner of cell (0, 0)
  double h = 0.0;
  int nx = 0;
  int ny = 0;

  Grid() = default;
  Grid(Point o, double cell, int cells_x, int cells_y) : origin(o), h(cell), nx(cells_x), ny(cells_y) {
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidInput("grid: cell size must be positive");
    if (nx < 8 || ny < 8) throw InvalidInput("grid: need at least 8 cells in each direction");
  }

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  int col(std::size_t k) const { return static_cast<int>(k % nx); }
  int row(std::size_t k) const { return static_cast<int>(k / nx); }
  bool in_bounds(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }
  Point center(int i, int j) const { return {origin.x + (i + 0.5) * h, origin.y + (j + 0.5) * h}; }
  Point center(std::size_t k) const { return center(col(k), row(k)); }
  double cell_area() const { return h * h; }

  /// Cell containing p, clamped to the grid.
  std::pair<int, int> locate(Point p) const {
    const int i = static_cast<int>(std::floor((p.x - origin.x) / h));
    const int j = static_cast<int>(std::floor((p.y - origin.y) / h));
    return {std::clamp(i, 0, nx - 1), std::clamp(j, 0, ny - 1)};
  }

  friend bool operator==(const Grid&, const Grid&) = default;
};

class RegionMask {
 public:
  RegionMask() = default;
  explicit RegionMask(const Grid& g, bool value = false) : grid_(g), inside_(g.size(), value ? 1 : 0) {}

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return inside_.size(); }
  bool operator[](std::size_t k) const { return inside_[k] != 0; }
  bool at(int i, int j) const { return grid_.in_bounds(i, j) && inside_[grid_.index(i, j)] != 0; }
  void set(std::size_t k, bool v) { inside_[k] = v ? 1 : 0; }
  void set(int i, int j, bool v) { set(grid_.index(i, j), v); }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto c : inside_) n += c;
    return n;
  }
  bool empty() const { return count() == 0; }

  RegionMask operator&(const RegionMask& o) const { return combine(o, [](bool a, bool b) { return a && b; }); }
  RegionMask operator|(const RegionMask& o) const { return combine(o, [](bool a, bool b) { return a || b; }); }
  RegionMask operator^(const RegionMask& o) const { return combine(o, [](bool a, bool b) { return a != b; }); }
  RegionMask minus(const RegionMask& o) const { return combine(o, [](bool a, bool b) { return a && !b; }); }
  RegionMask complement() const {
    RegionMask out(grid_);
    for (std::size_t k = 0; k < size(); ++k) out.inside_[k] = inside_[k] ? 0 : 1;
    return out;
  }

  friend bool operator==(const RegionMask&, const RegionMask&) = default;

 private:
  template <class Op>
  RegionMask combine(const RegionMask& o, Op op) const {
    if (!(grid_ == o.grid_)) throw InvalidInput("mask: grids differ");
    RegionMask out(grid_);
    for (std::size_t k = 0; k < size(); ++k) out.inside_[k] = op(inside_[k] != 0, o.inside_[k] != 0) ? 1 : 0;
    return out;
  }

  Grid grid_;
  std::vector<std::uint8_t> inside_;
};

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const Grid& g, double value = 0.0) : grid_(g), values_(g.size(), value) {}

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double at(int i, int j) const { return values_[grid_.index(i, j)]; }
  double& at(int i, int j) { return values_[grid_.index(i, j)]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  friend bool operator==(const ScalarField&, const ScalarField&) = default;

 private:
  Grid grid_;
  std::vector<double> values_;
};

//----------------------------------------------------------------------------
// Boundary data
//----------------------------------------------------------------------------

/// Closed-form boundary datum f. Evaluated at points of the plane so that the
/// same descriptor can be sampled on any boundary.
struct BoundaryFunction {
  enum class Kind { constant, linear, angular_cosine, bump };

  Kind kind = Kind::constant;
  double c0 = 1.0;           // constant value / linear offset / cosine mean / bump base
  double cx = 0.0;           // linear x coefficient
  double cy = 0.0;           // linear y coefficient
  double amplitude = 0.0;    // cosine or bump amplitude
  double frequency = 1.0;    // cosine angular frequency
  Point center;              // bump center
  double width = 1.0;        // bump radius

  static BoundaryFunction constant(double v) {
    BoundaryFunction f;
    f.kind = Kind::constant;
    f.c0 = v;
    return f;
  }
  static BoundaryFunction linear(double offset, double ax, double ay) {
    BoundaryFunction f;
    f.kind = Kind::linear;
    f.c0 = offset;
    f.cx = ax;
    f.cy = ay;
    return f;
  }
  /// mean + amplitude * cos(frequency * theta), theta the polar angle.
  static BoundaryFunction angular_cosine(double mean, double amp, double freq = 1.0) {
    BoundaryFunction f;
    f.kind = Kind::angular_cosine;
    f.c0 = mean;
    f.amplitude = amp;
    f.frequency = freq;
    return f;
  }
  /// base + amplitude * (1 - |x - center| / width)_+
  static BoundaryFunction bump(double base, double amp, Point c, double w) {
    if (!(w > 0.0)) throw InvalidInput("bump: width must be positive");
    BoundaryFunction f;
    f.kind = Kind::bump;
    f.c0 = base;
    f.amplitude = amp;
    f.center = c;
    f.width = w;
    return f;
  }

  double operator()(Point p) const {
    switch (kind) {
      case Kind::constant: return c0;
      case Kind::linear: return c0 + cx * p.x + cy * p.y;
      case Kind::angular_cosine: return c0 + amplitude * std::cos(frequency * std::atan2(p.y, p.x));
      case Kind::bump: return c0 + amplitude * std::max(0.0, 1.0 - distance(p, center) / width);
    }
    return 0.0;
  }

  std::string describe() const {
    std::ostringstream os;
    switch (kind) {
      case Kind::constant: os << "constant(" << c0 << ")"; break;
      case Kind::linear: os << "linear(" << c0 << "," << cx << "," << cy << ")"; break;
      case Kind::angular_cosine: os << "angular_cosine(" << c0 << "," << amplitude << "," << frequency << ")"; break;
      case Kind::bump:
        os << "bump(" << c0 << "," << amplitude << ",(" << center.x << "," << center.y << ")," << width << ")";
        break;
    }
    return os.str();
  }
};

struct BoundarySample {
  Point point;
  double value = 0.0;
};

/// Samples of f along the boundary, in arc-length order.
struct BoundaryData {
  std::vector<BoundarySample> samples;
  double spacing = 0.0;  // arc length between consecutive samples

  double max_value() const {
    double m = 0.0;
    for (const auto& s : samples) m = std::max(m, s.value);
    return m;
  }
  double min_value() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) m = std::min(m, s.value);
    return m;
  }
};

inline BoundaryData sample_boundary(const DomainSpec& domain, const BoundaryFunction& f, int count) {
  if (count < 16) throw InvalidInput("sample_boundary: need at least 16 samples");
  BoundaryData bd;
  const double per = domain.perimeter();
  bd.spacing = per / count;
  bd.samples.reserve(count);
  bool any_positive = false;
  for (int k = 0; k < count; ++k) {
    const Point p = domain.boundary_point(k * bd.spacing);
    const double v = f(p);
    if (!std::isfinite(v) || v < 0.0)
      throw InvalidInput("sample_boundary: boundary datum must be finite and non-negative, got " + std::to_string(v));
    any_positive = any_positive || v > 0.0;
    bd.samples.push_back({p, v});
  }
  if (!any_positive) throw InvalidInput("sample_boundary: boundary datum is identically zero");
  return bd;
}

//----------------------------------------------------------------------------
// Rasterization and measures
//----------------------------------------------------------------------------

inline constexpr int kGridMargin = 4;

struct Raster {
  Grid grid;
  RegionMask mask;
};

/// Cell-center membership raster. The cell size is the longer bounding-box
/// side divided by `resolution`, with a margin of kGridMargin cells.
inline Raster rasterize(const DomainSpec& domain, int resolution) {
  if (resolution < 8) throw InvalidInput("rasterize: resolution must be at least 8");
  const BoundingBox box = domain.bbox();
  const double h = std::max(box.width(), box.height()) / resolution;
  const int cx = static_cast<int>(std::ceil(box.width() / h - 1e-9));
  const int cy = static_cast<int>(std::ceil(box.height() / h - 1e-9));
  Grid grid({box.lo.x - kGridMargin * h, box.lo.y - kGridMargin * h}, h, std::max(cx, 1) + 2 * kGridMargin,
            std::max(cy, 1) + 2 * kGridMargin);
  RegionMask mask(grid);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) mask.set(i, j, domain.contains(grid.center(i, j)));
  if (mask.empty()) throw InvalidInput("rasterize: domain has zero area at this resolution");
  return {grid, mask};
}

inline double measure(const RegionMask& mask) {
  return static_cast<double>(mask.count()) * mask.grid().cell_area();
}

/// Per-cell reach: max over samples y of f(y)/|x - y|. A cell lies in the
/// union of balls B_{f(y)/lambda}(y) exactly when its reach exceeds lambda.
inline ScalarField ball_reach(const BoundaryData& bd, const Grid& grid) {
  ScalarField out(grid);
  const double huge = std::numeric_limits<double>::max();
  parallel_for(grid.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const Point x = grid.center(k);
      double best = 0.0;
      for (const auto& s : bd.samples) {
        if (s.value <= 0.0) continue;
        const double d = distance(x, s.point);
        best = d > 0.0 ? std::max(best, s.value / d) : huge;
      }
      out[k] = best;
    }
  });
  return out;
}

inline RegionMask union_of_balls(const ScalarField& reach, double lambda, const RegionMask& domain_mask) {
  if (!(lambda >= 0.0)) throw InvalidInput("union_of_balls: lambda must be non-negative");
  if (!(reach.grid() == domain_mask.grid())) throw InvalidInput("union_of_balls: grids differ");
  RegionMask out(domain_mask.grid());
  for (std::size_t k = 0; k < out.size(); ++k) out.set(k, domain_mask[k] && reach[k] > lambda);
  return out;
}

/// Omega_lambda: cells of domain_mask within f(y)/lambda of some sample y.
/// lambda == 0 means infinite radii, so any positive sample covers the domain.
inline RegionMask union_of_balls(const BoundaryData& bd, double lambda, const RegionMask& domain_mask) {
  return union_of_balls(ball_reach(bd, domain_mask.grid()), lambda, domain_mask);
}

namespace detail {

// Lower envelope of parabolas (squared distance transform along one line).
inline void distance_transform_1d(const double* f, int n, std::ptrdiff_t stride, double* out,
                                  std::vector<int>& v, std::vector<double>& z, std::vector<double>& tmp) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  tmp.resize(n);
  for (int q = 0; q < n; ++q) tmp[q] = f[q * stride];
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (tmp[q] == inf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    double s = ((tmp[q] + double(q) * q) - (tmp[v[k]] + double(v[k]) * v[k])) / (2.0 * q - 2.0 * v[k]);
    while (s <= z[k]) {
      --k;
      s = ((tmp[q] + double(q) * q) - (tmp[v[k]] + double(v[k]) * v[k])) / (2.0 * q - 2.0 * v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) out[q * stride] = inf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double d = q - v[j];
    out[q * stride] = d * d + tmp[v[j]];
  }
}

}  // namespace detail

/// Exact Euclidean distance (in length units) from every cell center to the
/// nearest marked cell center. Separable row/column envelope passes.
inline ScalarField distance_to_set(const Grid& grid, const RegionMask& set) {
  if (!(set.grid() == grid)) throw InvalidInput("distance_to_set: grids differ");
  if (set.empty()) throw InvalidInput("distance_to_set: set is empty");
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> sq(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) sq[k] = set[k] ? 0.0 : inf;
  std::vector<int> v;
  std::vector<double> z, tmp;
  for (int j = 0; j < grid.ny; ++j) {
    double* row = sq.data() + grid.index(0, j);
    detail::distance_transform_1d(row, grid.nx, 1, row, v, z, tmp);
  }
  for (int i = 0; i < grid.nx; ++i) {
    double* col = sq.data() + i;
    detail::distance_transform_1d(col, grid.ny, grid.nx, col, v, z, tmp);
  }
  ScalarField out(grid);
  for (std::size_t k = 0; k < grid.size(); ++k) out[k] = std::sqrt(sq[k]) * grid.h;
  return out;
}

/// Cells of `mask` with at least one 4-neighbor outside it.
inline RegionMask inner_boundary(const RegionMask& mask) {
  const Grid& g = mask.grid();
  RegionMask out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (mask.at(i, j) && (!mask.at(i - 1, j) || !mask.at(i + 1, j) || !mask.at(i, j - 1) || !mask.at(i, j + 1)))
        out.set(i, j, true);
  return out;
}

/// Cells outside `mask` within Chebyshev distance `width` of it.
inline RegionMask outer_ring(const RegionMask& mask, int width = 1) {
  const Grid& g = mask.grid();
  RegionMask out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (mask.at(i, j)) continue;
      bool near = false;
      for (int dj = -width; dj <= width && !near; ++dj)
        for (int di = -width; di <= width && !near; ++di) near = mask.at(i + di, j + dj);
      out.set(i, j, near);
    }
  return out;
}

/// Cells whose center lies within `radius` of a cell of `mask`.
inline RegionMask dilate(const RegionMask& mask, double radius) {
  const ScalarField d = distance_to_set(mask.grid(), mask);
  RegionMask out(mask.grid());
  for (std::size_t k = 0; k < out.size(); ++k) out.set(k, d[k] <= radius + 1e-12 * mask.grid().h);
  return out;
}

/// Value of the nearest boundary sample at every cell center.
inline ScalarField nearest_sample_values(const BoundaryData& bd, const Grid& grid) {
  ScalarField out(grid);
  parallel_for(grid.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const Point x = grid.center(k);
      double best = std::numeric_limits<double>::infinity();
      double value = 0.0;
      for (const auto& s : bd.samples) {
        const double d = (x.x - s.point.x) * (x.x - s.point.x) + (x.y - s.point.y) * (x.y - s.point.y);
        if (d < best) {
          best = d;
          value = s.value;
        }
      }
      out[k] = value;
    }
  });
  return out;
}

}  // namespace optdesign
