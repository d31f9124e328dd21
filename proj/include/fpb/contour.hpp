#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "fpb/error.hpp"
#include "fpb/geom.hpp"
#include "fpb/raster.hpp"

namespace fpb {

/// Outer boundary of a 4-connected component, traced along pixel edges with
/// the component on the right-hand side. Vertices sit on pixel corners, so the
/// polygon encloses every pixel of the component and its area equals the
/// pixel count when the component has no holes. Collinear runs are merged.
inline Polygon extract_contour(const RasterMask& component)
{
  const int w = component.width(), h = component.height();
  int start = -1;
  const auto& bits = component.bits();
  for (int i = 0; i < w * h; ++i) {
    if (bits[i]) {
      start = i;
      break;
    }
  }
  if (start < 0) fail(ErrorCode::EmptyComponent, "cannot trace an empty component");

  // Directions: 0 east, 1 south, 2 west, 3 north (screen coordinates).
  constexpr std::array<int, 4> dx{1, 0, -1, 0};
  constexpr std::array<int, 4> dy{0, 1, 0, -1};
  auto inside = [&](int x, int y) { return component.get(x, y); };
  // Pixels ahead of corner (x, y) when heading d: {ahead-left, ahead-right}.
  auto ahead = [&](int x, int y, int d) -> std::pair<bool, bool> {
    switch (d) {
      case 0: return {inside(x, y - 1), inside(x, y)};
      case 1: return {inside(x, y), inside(x - 1, y)};
      case 2: return {inside(x - 1, y), inside(x - 1, y - 1)};
      default: return {inside(x - 1, y - 1), inside(x, y - 1)};
    }
  };

  const int sx = start % w, sy = start / w;
  Polygon out;
  out.vertices.push_back({static_cast<double>(sx), static_cast<double>(sy)});
  int x = sx + 1, y = sy, d = 0;
  const long limit = 4L * (w + 1) * (h + 1) + 8;
  for (long step = 0; step < limit; ++step) {
    const auto [left, right] = ahead(x, y, d);
    int nd = d;
    if (!right) {
      nd = (d + 1) % 4;
    } else if (left) {
      nd = (d + 3) % 4;
    }
    if (x == sx && y == sy && nd == 0) break;
    if (nd != d) out.vertices.push_back({static_cast<double>(x), static_cast<double>(y)});
    d = nd;
    x += dx[d];
    y += dy[d];
  }
  return out;
}

namespace detail {

inline double point_segment_distance(Point2 p, Point2 a, Point2 b) noexcept
{
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

// Endpoint-fit recursion over the open chain pts[i..j] (indices modulo n).
inline void endpoint_fit(const std::vector<Point2>& pts, std::size_t i, std::size_t j, double tol,
                         std::vector<bool>& keep)
{
  const std::size_t n = pts.size();
  std::size_t span = (j + n - i) % n;
  if (span < 2) return;
  double best = -1.0;
  std::size_t best_k = i;
  for (std::size_t s = 1; s < span; ++s) {
    const std::size_t k = (i + s) % n;
    const double d = point_segment_distance(pts[k], pts[i], pts[j]);
    if (d > best) {
      best = d;
      best_k = k;
    }
  }
  if (best > tol) {
    keep[best_k] = true;
    endpoint_fit(pts, i, best_k, tol, keep);
    endpoint_fit(pts, best_k, j, tol, keep);
  }
}

inline std::vector<Point2> simplify_closed(const std::vector<Point2>& pts, double tol)
{
  const std::size_t n = pts.size();
  if (n <= 3) return pts;
  auto farthest_from = [&](std::size_t from) {
    std::size_t best = from;
    double bd = -1.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = distance(pts[k], pts[from]);
      if (d > bd) {
        bd = d;
        best = k;
      }
    }
    return best;
  };
  const std::size_t a = farthest_from(0);
  const std::size_t b = farthest_from(a);
  std::vector<bool> keep(n, false);
  keep[a] = keep[b] = true;
  endpoint_fit(pts, a, b, tol, keep);
  endpoint_fit(pts, b, a, tol, keep);
  std::vector<Point2> out;
  for (std::size_t k = 0; k < n; ++k) {
    if (keep[k]) out.push_back(pts[k]);
  }
  // The anchors may sit mid-edge; drop any vertex that lies within tolerance
  // of the chord joining its neighbours, weakest first.
  while (out.size() > 3) {
    double weakest = tol;
    std::size_t idx = out.size();
    for (std::size_t k = 0; k < out.size(); ++k) {
      const Point2 p = out[(k + out.size() - 1) % out.size()];
      const Point2 q = out[(k + 1) % out.size()];
      const double d = point_segment_distance(out[k], p, q);
      if (d <= weakest) {
        weakest = d;
        idx = k;
      }
    }
    if (idx == out.size()) break;
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(idx));
  }
  return out;
}

}  // namespace detail

constexpr double kDefaultSimplifyFraction = 0.02;
constexpr std::size_t kMaxSimplifiedVertices = 8;

/// Closed-polygon endpoint-fit simplification with tolerance
/// eps_fraction * perimeter. Results above 8 vertices are retried with the
/// tolerance doubled, at most four times.
inline Polygon simplify_polygon(const Polygon& poly, double eps_fraction = kDefaultSimplifyFraction)
{
  if (poly.size() < 3) fail(ErrorCode::DegenerateGeometry, "simplify needs at least 3 vertices");
  if (!(eps_fraction > 0.0)) fail(ErrorCode::DegenerateGeometry, "eps_fraction must be positive");
  double tol = eps_fraction * perimeter(poly);
  std::vector<Point2> out = detail::simplify_closed(poly.vertices, tol);
  for (int retry = 0; retry < 4 && out.size() > kMaxSimplifiedVertices; ++retry) {
    tol *= 2.0;
    out = detail::simplify_closed(poly.vertices, tol);
  }
  if (out.size() < 3 || distinct_vertex_count(Polygon{out}) < 3) {
    fail(ErrorCode::DegenerateGeometry, "simplification collapsed below 3 vertices");
  }
  return Polygon{std::move(out)};
}

struct ShapeRules {
  double right_angle_lo = 85.0;
  double right_angle_hi = 95.0;
  double square_aspect_max = 1.1;  // long/short side of the min-area rectangle
  double side_tolerance = 0.15;    // relative difference of opposite sides
  double angle_tolerance = 15.0;   // degrees between opposite angles
};

/// Interior angles in degrees, in vertex order.
inline std::vector<double> interior_angles(const Polygon& poly)
{
  const Polygon p = normalize_winding(poly);
  const std::size_t n = p.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 in = p[i] - p[(i + n - 1) % n];
    const Point2 outv = p[(i + 1) % n] - p[i];
    const double turn = rad_to_deg(std::atan2(cross(in, outv), dot(in, outv)));
    out[i] = 180.0 - turn;
  }
  return out;
}

/// Long/short side ratio of the minimum-area bounding rectangle, searched
/// over the polygon's edge directions.
inline double min_area_rect_aspect(const Polygon& poly)
{
  double best_area = 1e300, aspect = 1.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 e = poly[(i + 1) % n] - poly[i];
    const double len = norm(e);
    if (len == 0.0) continue;
    const Point2 u = e * (1.0 / len);
    const Point2 v{-u.y, u.x};
    double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
    for (auto p : poly.vertices) {
      umin = std::min(umin, dot(p, u));
      umax = std::max(umax, dot(p, u));
      vmin = std::min(vmin, dot(p, v));
      vmax = std::max(vmax, dot(p, v));
    }
    const double a = umax - umin, b = vmax - vmin;
    if (a * b < best_area && std::min(a, b) > 0.0) {
      best_area = a * b;
      aspect = std::max(a, b) / std::min(a, b);
    }
  }
  return aspect;
}

inline ShapeClass classify_shape(const Polygon& poly, const ShapeRules& rules = {})
{
  if (poly.size() == 3) return ShapeClass::Triangle;
  if (poly.size() != 4) return ShapeClass::Unknown;
  const auto ang = interior_angles(poly);
  const bool all_right = std::all_of(ang.begin(), ang.end(), [&](double a) {
    return a >= rules.right_angle_lo && a <= rules.right_angle_hi;
  });
  if (all_right) {
    return min_area_rect_aspect(poly) <= rules.square_aspect_max ? ShapeClass::Square : ShapeClass::Unknown;
  }
  std::array<double, 4> side{};
  for (std::size_t i = 0; i < 4; ++i) side[i] = distance(poly[i], poly[(i + 1) % 4]);
  auto close_len = [&](double a, double b) { return std::abs(a - b) <= rules.side_tolerance * std::max(a, b); };
  auto close_ang = [&](double a, double b) { return std::abs(a - b) <= rules.angle_tolerance; };
  if (close_len(side[0], side[2]) && close_len(side[1], side[3]) && close_ang(ang[0], ang[2]) &&
      close_ang(ang[1], ang[3])) {
    return ShapeClass::Parallelogram;
  }
  return ShapeClass::Unknown;
}

/// Contour tracing, simplification and classification of a single component.
inline ShapeClass classify_component(const RasterMask& component, const ShapeRules& rules = {},
                                     double eps_fraction = kDefaultSimplifyFraction)
{
  try {
    return classify_shape(simplify_polygon(extract_contour(component), eps_fraction), rules);
  } catch (const Error&) {
    return ShapeClass::Unknown;
  }
}

}  // namespace fpb
