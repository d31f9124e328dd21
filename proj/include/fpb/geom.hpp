#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "fpb/error.hpp"

namespace fpb {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2 operator+(Point2 a, Point2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator*(Point2 a, double s) noexcept { return {a.x * s, a.y * s}; }
  friend constexpr Point2 operator*(double s, Point2 a) noexcept { return {a.x * s, a.y * s}; }
  friend constexpr bool operator==(Point2, Point2) noexcept = default;
};

constexpr double dot(Point2 a, Point2 b) noexcept { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point2 a, Point2 b) noexcept { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) noexcept { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) noexcept { return norm(a - b); }

/// Closed polygon; the edge from the last vertex back to the first is implicit.
struct Polygon {
  std::vector<Point2> vertices;

  std::size_t size() const noexcept { return vertices.size(); }
  const Point2& operator[](std::size_t i) const { return vertices[i]; }
  Point2& operator[](std::size_t i) { return vertices[i]; }
  friend bool operator==(const Polygon&, const Polygon&) = default;
};

struct ColorRGB {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend constexpr bool operator==(ColorRGB, ColorRGB) noexcept = default;
};

/// Chebyshev distance between colors (largest per-channel difference).
constexpr int color_distance(ColorRGB a, ColorRGB b) noexcept
{
  const int dr = a.r > b.r ? a.r - b.r : b.r - a.r;
  const int dg = a.g > b.g ? a.g - b.g : b.g - a.g;
  const int db = a.b > b.b ? a.b - b.b : b.b - a.b;
  return std::max({dr, dg, db});
}

enum class ShapeClass { Triangle, Square, Parallelogram, Unknown };

constexpr std::string_view to_string(ShapeClass s) noexcept
{
  switch (s) {
    case ShapeClass::Triangle: return "triangle";
    case ShapeClass::Square: return "square";
    case ShapeClass::Parallelogram: return "parallelogram";
    case ShapeClass::Unknown: return "unknown";
  }
  return "unknown";
}

inline ShapeClass shape_class_from_string(std::string_view s)
{
  if (s == "triangle") return ShapeClass::Triangle;
  if (s == "square") return ShapeClass::Square;
  if (s == "parallelogram") return ShapeClass::Parallelogram;
  if (s == "unknown") return ShapeClass::Unknown;
  fail(ErrorCode::ParseError, "unknown shape class '" + std::string(s) + "'");
}

constexpr double deg_to_rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

/// Shoelace sum; positive for clockwise order on screen (y axis pointing down).
inline double signed_area(const Polygon& poly) noexcept
{
  const auto n = poly.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += cross(poly[i], poly[(i + 1) % n]);
  }
  return 0.5 * acc;
}

inline std::size_t distinct_vertex_count(const Polygon& poly)
{
  std::vector<Point2> pts = poly.vertices;
  std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  return static_cast<std::size_t>(std::unique(pts.begin(), pts.end()) - pts.begin());
}

inline double polygon_area(const Polygon& poly)
{
  if (distinct_vertex_count(poly) < 3) {
    fail(ErrorCode::DegenerateGeometry, "polygon has fewer than 3 distinct vertices");
  }
  const double a = std::abs(signed_area(poly));
  if (!(a > 0.0)) fail(ErrorCode::DegenerateGeometry, "polygon has zero area");
  return a;
}

inline double perimeter(const Polygon& poly) noexcept
{
  double p = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    p += distance(poly[i], poly[(i + 1) % poly.size()]);
  }
  return p;
}

/// Area centroid; falls back to the vertex mean for zero-area input.
inline Point2 centroid(const Polygon& poly) noexcept
{
  const auto n = poly.size();
  double a = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 p = poly[i];
    const Point2 q = poly[(i + 1) % n];
    const double c = cross(p, q);
    a += c;
    cx += (p.x + q.x) * c;
    cy += (p.y + q.y) * c;
  }
  if (std::abs(a) < 1e-12) {
    Point2 m;
    for (auto p : poly.vertices) m = m + p;
    return n ? m * (1.0 / static_cast<double>(n)) : m;
  }
  return {cx / (3.0 * a), cy / (3.0 * a)};
}

/// Reorders vertices so signed_area() is positive.
inline Polygon normalize_winding(Polygon poly)
{
  if (signed_area(poly) < 0.0) std::reverse(poly.vertices.begin(), poly.vertices.end());
  return poly;
}

/// cos/sin of an angle in degrees, exact at multiples of 90 and 45 degrees.
inline Point2 unit_rotation(double deg) noexcept
{
  double r = std::fmod(deg, 360.0);
  if (r < 0) r += 360.0;
  constexpr double h = std::numbers::sqrt2 / 2.0;
  const double q = r / 45.0;
  if (q == std::floor(q)) {
    constexpr Point2 table[8] = {{1, 0}, {h, h}, {0, 1}, {-h, h}, {-1, 0}, {-h, -h}, {0, -1}, {h, -h}};
    return table[static_cast<int>(q) % 8];
  }
  const double rad = deg_to_rad(r);
  return {std::cos(rad), std::sin(rad)};
}

inline Point2 rotate_point(Point2 p, double deg, Point2 about) noexcept
{
  const Point2 cs = unit_rotation(deg);
  const Point2 d = p - about;
  return {about.x + cs.x * d.x - cs.y * d.y, about.y + cs.y * d.x + cs.x * d.y};
}

/// Rotates about `about` (positive angles turn +x toward +y), then translates.
/// A zero rotation leaves coordinates bit-identical before translation.
inline Polygon transform_polygon(const Polygon& poly, double rotate_deg, Point2 about, Point2 translate)
{
  Polygon out = poly;
  const bool rotate = std::fmod(rotate_deg, 360.0) != 0.0;
  for (auto& v : out.vertices) {
    if (rotate) v = rotate_point(v, rotate_deg, about);
    if (translate.x != 0.0 || translate.y != 0.0) v = v + translate;
  }
  return out;
}

inline Polygon scale_polygon(const Polygon& poly, double factor, Point2 about)
{
  Polygon out = poly;
  if (factor == 1.0) return out;
  for (auto& v : out.vertices) v = about + (v - about) * factor;
  return out;
}

struct BBox {
  double x0, y0, x1, y1;
  double width() const noexcept { return x1 - x0; }
  double height() const noexcept { return y1 - y0; }
};

inline BBox bounding_box(std::span<const Point2> pts) noexcept
{
  BBox b{1e300, 1e300, -1e300, -1e300};
  for (auto p : pts) {
    b.x0 = std::min(b.x0, p.x);
    b.y0 = std::min(b.y0, p.y);
    b.x1 = std::max(b.x1, p.x);
    b.y1 = std::max(b.y1, p.y);
  }
  return b;
}

inline BBox bounding_box(const Polygon& poly) noexcept { return bounding_box(std::span<const Point2>(poly.vertices)); }

/// Positive-area intersection test for two convex polygons (separating axis).
/// Contact along edges or at vertices within `tol` does not count as overlap.
inline bool convex_overlap(const Polygon& a, const Polygon& b, double tol = 1e-7)
{
  auto separated_on_axes_of = [&](const Polygon& p) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const Point2 e = p[(i + 1) % p.size()] - p[i];
      const Point2 axis{-e.y, e.x};
      const double len = norm(axis);
      if (len == 0.0) continue;
      double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
      for (auto v : a.vertices) {
        const double d = dot(v, axis) / len;
        amin = std::min(amin, d);
        amax = std::max(amax, d);
      }
      for (auto v : b.vertices) {
        const double d = dot(v, axis) / len;
        bmin = std::min(bmin, d);
        bmax = std::max(bmax, d);
      }
      if (std::min(amax, bmax) - std::max(amin, bmin) <= tol) return true;
    }
    return false;
  };
  return !(separated_on_axes_of(a) || separated_on_axes_of(b));
}

}  // namespace fpb
