#pragma once
// File output: 16-bit PGM rasters with a grid sidecar, SVG overlays of
// free-boundary point sets, the convergence CSV and JSON documents.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "optdesign/errors.hpp"
#include "optdesign/experiments.hpp"
#include "optdesign/freeboundary.hpp"
#include "optdesign/geometry.hpp"

namespace optdesign {

namespace fs = std::filesystem;

inline void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

inline std::ofstream open_output(const fs::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

inline void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

inline std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

/// Grid metadata stored next to a raster: pixel value k maps to k * scale.
struct RasterMeta {
  Grid grid;
  double scale = 0.0;
  double max_value = 0.0;
};

/// Writes `field` as a binary 16-bit PGM (rows from the top, i.e. largest y
/// first) plus a `.meta` sidecar. Pixel = round(value / max * 65535) with max
/// the largest field value; negative values clamp to 0.
inline RasterMeta write_raster(const ScalarField& field, const fs::path& pgm_path) {
  const Grid& g = field.grid();
  double max_value = 0.0;
  for (double v : field.values()) max_value = std::max(max_value, v);
  RasterMeta meta{g, max_value > 0.0 ? max_value / 65535.0 : 1.0, max_value};

  auto out = open_output(pgm_path, true);
  out << "P5\n# max_value " << format_number(max_value) << " (pixel 65535), rows top to bottom\n"
      << g.nx << ' ' << g.ny << "\n65535\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(g.nx) * 2);
  for (int j = g.ny - 1; j >= 0; --j) {
    for (int i = 0; i < g.nx; ++i) {
      const double v = std::clamp(field.at(i, j), 0.0, max_value);
      const auto px = static_cast<std::uint16_t>(max_value > 0.0 ? std::lround(v / max_value * 65535.0) : 0);
      row[2 * i] = static_cast<unsigned char>(px >> 8);
      row[2 * i + 1] = static_cast<unsigned char>(px & 0xff);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  finish(out, pgm_path);

  fs::path meta_path = pgm_path;
  meta_path.replace_extension(".meta");
  auto m = open_output(meta_path);
  m << "origin_x " << format_number(g.origin.x) << "\n"
    << "origin_y " << format_number(g.origin.y) << "\n"
    << "h " << format_number(g.h) << "\n"
    << "nx " << g.nx << "\n"
    << "ny " << g.ny << "\n"
    << "scale " << format_number(meta.scale) << "\n"
    << "max_value " << format_number(max_value) << "\n"
    << "row_order top_to_bottom\n";
  finish(m, meta_path);
  return meta;
}

/// Reads a raster written by write_raster (values quantized to 16 bits).
inline ScalarField read_raster(const fs::path& pgm_path) {
  fs::path meta_path = pgm_path;
  meta_path.replace_extension(".meta");
  std::ifstream m(meta_path);
  if (!m) throw IoError("cannot read raster metadata " + meta_path.string());
  double ox = 0, oy = 0, h = 0, scale = 0;
  int nx = 0, ny = 0;
  std::string key;
  while (m >> key) {
    if (key == "origin_x") m >> ox;
    else if (key == "origin_y") m >> oy;
    else if (key == "h") m >> h;
    else if (key == "nx") m >> nx;
    else if (key == "ny") m >> ny;
    else if (key == "scale") m >> scale;
    else {
      std::string rest;
      std::getline(m, rest);
    }
  }
  Grid g;
  try {
    g = Grid({ox, oy}, h, nx, ny);
  } catch (const InvalidInput& e) {
    throw IoError("bad raster metadata in " + meta_path.string() + ": " + e.what());
  }

  std::ifstream in(pgm_path, std::ios::binary);
  if (!in) throw IoError("cannot read raster " + pgm_path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5") throw IoError(pgm_path.string() + " is not a binary PGM");
  auto skip = [&] {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string line;
      std::getline(in, line);
      in >> std::ws;
    }
  };
  int w = 0, hh = 0, maxval = 0;
  skip();
  in >> w;
  skip();
  in >> hh;
  skip();
  in >> maxval;
  in.get();
  if (w != nx || hh != ny || maxval != 65535) throw IoError(pgm_path.string() + " does not match its metadata");
  ScalarField field(g);
  std::vector<unsigned char> row(static_cast<std::size_t>(nx) * 2);
  for (int j = ny - 1; j >= 0; --j) {
    if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size())))
      throw IoError(pgm_path.string() + " is truncated");
    for (int i = 0; i < nx; ++i) field.at(i, j) = ((row[2 * i] << 8) | row[2 * i + 1]) * scale;
  }
  return field;
}

/// Role of a point set in an overlay; each role has a fixed color.
enum class OverlayRole { domain, limit, solution, auxiliary };

inline const char* role_name(OverlayRole r) {
  switch (r) {
    case OverlayRole::domain: return "domain";
    case OverlayRole::limit: return "limit";
    case OverlayRole::solution: return "solution";
    case OverlayRole::auxiliary: return "auxiliary";
  }
  return "";
}

inline const char* role_color(OverlayRole r) {
  switch (r) {
    case OverlayRole::domain: return "#555555";
    case OverlayRole::limit: return "#d62728";
    case OverlayRole::solution: return "#1f77b4";
    case OverlayRole::auxiliary: return "#2ca02c";
  }
  return "#000000";
}

struct OverlaySet {
  std::string label;
  OverlayRole role = OverlayRole::solution;
  BoundarySet points;
};

namespace detail {

// Splits a point set into chains of points at most `link` apart, greedily:
// each chain starts at the lowest remaining point (by y, then x) and extends
// to the nearest unused neighbor.
inline std::vector<std::vector<Point>> chain_points(const BoundarySet& set, double link) {
  std::vector<Point> pts = set.points;
  std::sort(pts.begin(), pts.end(), [](Point a, Point b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
  std::vector<char> used(pts.size(), 0);
  std::vector<std::vector<Point>> chains;
  for (std::size_t s = 0; s < pts.size(); ++s) {
    if (used[s]) continue;
    std::vector<Point> chain{pts[s]};
    used[s] = 1;
    std::size_t cur = s;
    for (;;) {
      double best = link * link * (1 + 1e-9);
      std::size_t next = pts.size();
      for (std::size_t k = 0; k < pts.size(); ++k) {
        if (used[k]) continue;
        const double dx = pts[k].x - pts[cur].x, dy = pts[k].y - pts[cur].y;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best) {
          best = d2;
          next = k;
        }
      }
      if (next == pts.size()) break;
      used[next] = 1;
      chain.push_back(pts[next]);
      cur = next;
    }
    chains.push_back(std::move(chain));
  }
  return chains;
}

}  // namespace detail

/// SVG with one group of polylines per set, in the given order. One grid cell
/// maps to `pixels_per_cell` pixels; y points up in grid coordinates.
inline void write_overlay(const Grid& g, const std::vector<OverlaySet>& sets, const fs::path& path,
                          double pixels_per_cell = 4.0) {
  const double s = pixels_per_cell / g.h;
  const double W = g.nx * pixels_per_cell, H = g.ny * pixels_per_cell;
  auto X = [&](double x) { return format_number(std::round((x - g.origin.x) * s * 100.0) / 100.0); };
  auto Y = [&](double y) { return format_number(std::round((H - (y - g.origin.y) * s) * 100.0) / 100.0); };
  auto out = open_output(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\">\n";
  out << "  <rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  for (const auto& set : sets) {
    out << "  <g id=\"" << set.label << "\" class=\"" << role_name(set.role) << "\" stroke=\"" << role_color(set.role)
        << "\" fill=\"none\" stroke-width=\"1.5\">\n";
    for (const auto& chain : detail::chain_points(set.points, 1.5 * g.h)) {
      out << "    <polyline points=\"";
      for (std::size_t k = 0; k < chain.size(); ++k) out << (k ? " " : "") << X(chain[k].x) << ',' << Y(chain[k].y);
      if (chain.size() == 1) out << ' ' << X(chain[0].x) << ',' << Y(chain[0].y);
      out << "\"/>\n";
    }
    out << "  </g>\n";
  }
  out << "</svg>\n";
  finish(out, path);
}

/// Cell centers of the inner boundary of a mask, as a point set.
inline BoundarySet mask_outline(const RegionMask& mask) {
  BoundarySet out;
  const RegionMask b = inner_boundary(mask);
  for (std::size_t k = 0; k < b.size(); ++k)
    if (b[k]) out.points.push_back(mask.grid().center(k));
  return out;
}

inline constexpr const char* kConvergenceColumns = "p,energy_root,volume,hausdorff,lambda_p,sup_err,max_grad";

/// One line per row; failed rows keep p and leave the other cells empty.
inline void write_convergence_csv(const ExperimentReport& report, const fs::path& path) {
  auto out = open_output(path);
  out << kConvergenceColumns << "\n";
  for (const auto& r : report.rows) {
    out << format_number(r.p);
    if (r.failed) {
      out << ",,,,,,\n";
      continue;
    }
    for (double v : {r.energy_root, r.volume, r.hausdorff_to_limit, r.lambda_p_estimate, r.sup_norm_error_vs_psi,
                     r.max_grad})
      out << ',' << format_number(v);
    out << "\n";
  }
  finish(out, path);
}

inline void write_json(const Json& j, const fs::path& path) {
  auto out = open_output(path);
  out << j.dump(2) << "\n";
  finish(out, path);
}

inline Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace optdesign
