#include <gtest/gtest.h>

#include <cmath>
#include <deque>
#include <numbers>

#include "fpb/contour.hpp"
#include "fpb/geom.hpp"
#include "fpb/pieces.hpp"
#include "fpb/raster.hpp"
#include "fpb/rng.hpp"

using namespace fpb;

namespace {

// Independent crossing-number point-in-polygon test.
bool oracle_inside(const Polygon& poly, Point2 p)
{
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point2 a = poly[i], b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x) in = !in;
    }
  }
  return in;
}

long oracle_pixel_area(const Polygon& poly, int w, int h)
{
  long n = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) n += oracle_inside(poly, {x + 0.5, y + 0.5});
  }
  return n;
}

// Independent queue-based flood fill component count (4-connectivity).
int oracle_component_count(const RasterMask& m)
{
  std::vector<char> seen(static_cast<std::size_t>(m.width()) * m.height(), 0);
  int count = 0;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y) || seen[y * m.width() + x]) continue;
      ++count;
      std::deque<std::pair<int, int>> q{{x, y}};
      seen[y * m.width() + x] = 1;
      while (!q.empty()) {
        auto [cx, cy] = q.front();
        q.pop_front();
        const int nx[4] = {cx + 1, cx - 1, cx, cx};
        const int ny[4] = {cy, cy, cy + 1, cy - 1};
        for (int k = 0; k < 4; ++k) {
          if (m.get(nx[k], ny[k]) && !seen[ny[k] * m.width() + nx[k]]) {
            seen[ny[k] * m.width() + nx[k]] = 1;
            q.push_back({nx[k], ny[k]});
          }
        }
      }
    }
  }
  return count;
}

Polygon square_poly(double side, Point2 center, double deg)
{
  Polygon p{{{-side / 2, -side / 2}, {side / 2, -side / 2}, {side / 2, side / 2}, {-side / 2, side / 2}}};
  return transform_polygon(p, deg, {0, 0}, center);
}

RasterMask fill_rect(int w, int h, int x0, int y0, int x1, int y1)
{
  RasterMask m(w, h);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) m.set(x, y);
  }
  return m;
}

}  // namespace

TEST(PolygonArea, Examples)
{
  EXPECT_DOUBLE_EQ(polygon_area(Polygon{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}}), 1.0);
  EXPECT_DOUBLE_EQ(polygon_area(Polygon{{{0, 0}, {2, 0}, {0, 2}}}), 2.0);
  const double s = 37.0;
  double total = 0.0;
  for (int i = 0; i < kPieceCount; ++i) {
    const double a = polygon_area(scale_polygon(canonical_pieces()[i], s, {0, 0}));
    EXPECT_NEAR(a, s * s * area_fraction(kPieceKinds[i]), 1e-9);
    total += a;
  }
  EXPECT_NEAR(total, s * s, 1e-9);
}

TEST(PolygonArea, DegenerateThrows)
{
  try {
    polygon_area(Polygon{{{0, 0}, {1, 1}, {0, 0}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateGeometry);
  }
  EXPECT_THROW(polygon_area(Polygon{{{0, 0}, {1, 1}, {2, 2}}}), Error);
}

TEST(Rasterize, AxisAlignedRectangle)
{
  const auto m = rasterize(Polygon{{{2, 3}, {6, 3}, {6, 5}, {2, 5}}}, 10, 10);
  EXPECT_EQ(m.count(), 8);
  for (int y = 3; y < 5; ++y)
    for (int x = 2; x < 6; ++x) EXPECT_TRUE(m.at(x, y));
}

TEST(Rasterize, OffCanvasIsEmptyAndClipped)
{
  EXPECT_EQ(rasterize(Polygon{{{20, 20}, {30, 20}, {30, 30}}}, 10, 10).count(), 0);
  EXPECT_EQ(rasterize(Polygon{{{-5, -5}, {5, -5}, {5, 5}, {-5, 5}}}, 10, 10).count(), 25);
}

TEST(Rasterize, MatchesBruteForceOracleOnRotatedSquares)
{
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const double side = rng.uniform(40, 90);
    const auto poly = square_poly(side, {rng.uniform(60, 70), rng.uniform(60, 70)}, rng.uniform(0, 360));
    const auto m = rasterize(poly, 140, 140);
    EXPECT_EQ(m.count(), oracle_pixel_area(poly, 140, 140));
    const double ratio = static_cast<double>(m.count()) / polygon_area(poly);
    EXPECT_GE(ratio, 0.98);
    EXPECT_LE(ratio, 1.02);
  }
}

TEST(Rasterize, SharedEdgesTileWithoutGapsOrOverlap)
{
  // The unit-square dissection at an integer-aligned offset: pieces must
  // partition the square's pixels exactly.
  const double s = 80;
  RasterMask uni(120, 120);
  long sum = 0;
  for (const auto& piece : canonical_pieces()) {
    auto m = rasterize(transform_polygon(scale_polygon(piece, s, {0, 0}), 0, {}, {20, 20}), 120, 120);
    EXPECT_EQ(intersection_count(uni, m), 0);
    sum += m.count();
    merge_into(uni, m);
  }
  EXPECT_EQ(sum, 6400);
  EXPECT_EQ(uni.count(), 6400);
}

TEST(MaskIou, Examples)
{
  const auto a = fill_rect(30, 30, 0, 0, 10, 10);
  const auto b = fill_rect(30, 30, 5, 0, 15, 10);
  const auto c = fill_rect(30, 30, 20, 20, 25, 25);
  EXPECT_DOUBLE_EQ(mask_iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(mask_iou(a, c), 0.0);
  EXPECT_NEAR(mask_iou(a, b), 50.0 / 150.0, 1e-12);
  EXPECT_DOUBLE_EQ(mask_iou(RasterMask(4, 4), RasterMask(4, 4)), 1.0);
  try {
    mask_iou(RasterMask(4, 4), RasterMask(4, 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(MaskIou, SymmetricAndMonotoneUnderShrinking)
{
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const int x0 = rng.uniform_int(0, 20), y0 = rng.uniform_int(0, 20);
    const auto a = fill_rect(40, 40, x0, y0, x0 + rng.uniform_int(1, 19), y0 + rng.uniform_int(1, 19));
    const int u0 = rng.uniform_int(0, 20), v0 = rng.uniform_int(0, 20);
    const int u1 = u0 + rng.uniform_int(2, 19), v1 = v0 + rng.uniform_int(1, 19);
    const auto b = fill_rect(40, 40, u0, v0, u1, v1);
    EXPECT_DOUBLE_EQ(mask_iou(a, b), mask_iou(b, a));
    // Removing pixels of b that lie outside a never lowers the IoU.
    RasterMask shrunk = b;
    for (int y = 0; y < 40; ++y) {
      for (int x = 0; x < 40; ++x) {
        if (shrunk.at(x, y) && !a.at(x, y) && rng.below(2)) shrunk.set(x, y, false);
      }
    }
    if (shrunk.count() > 0) {
      EXPECT_GE(mask_iou(a, shrunk) + 1e-12, mask_iou(a, b));
    }
  }
}

TEST(ConnectedComponents, Examples)
{
  RasterMask m(7, 3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) {
      m.set(x, y);
      m.set(x + 4, y);
    }
  auto comps = connected_components(m);
  ASSERT_EQ(comps.size(), 2u);
  EXPECT_EQ(comps[0].area, 9);
  EXPECT_EQ(comps[1].area, 9);
  EXPECT_DOUBLE_EQ(comps[0].centroid.x, 1.5);

  RasterMask diag(2, 2);
  diag.set(0, 0);
  diag.set(1, 1);
  EXPECT_EQ(connected_components(diag).size(), 2u);
  EXPECT_TRUE(connected_components(RasterMask(5, 5)).empty());
}

TEST(ConnectedComponents, MatchesFloodFillOracleAndPartitions)
{
  Rng rng(5);
  for (int t = 0; t < 30; ++t) {
    RasterMask m(48, 32);
    for (auto& b : m.bits()) b = rng.uniform01() < 0.45 ? 1 : 0;
    const auto comps = connected_components(m);
    EXPECT_EQ(static_cast<int>(comps.size()), oracle_component_count(m));
    RasterMask uni(48, 32);
    long total = 0;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      if (i > 0) {
        EXPECT_GE(comps[i - 1].area, comps[i].area);
      }
      EXPECT_EQ(intersection_count(uni, comps[i].mask), 0);
      EXPECT_EQ(comps[i].mask.count(), comps[i].area);
      merge_into(uni, comps[i].mask);
      total += comps[i].area;
    }
    EXPECT_EQ(uni, m);
    EXPECT_EQ(total, m.count());
  }
}

TEST(ExtractContour, BlockAndSinglePixel)
{
  const auto block = fill_rect(10, 10, 3, 2, 7, 6);
  const auto c = simplify_polygon(extract_contour(block));
  ASSERT_EQ(c.size(), 4u);
  EXPECT_DOUBLE_EQ(polygon_area(c), 16.0);
  const auto bb = bounding_box(c);
  EXPECT_DOUBLE_EQ(bb.x0, 3);
  EXPECT_DOUBLE_EQ(bb.y0, 2);
  EXPECT_DOUBLE_EQ(bb.x1, 7);
  EXPECT_DOUBLE_EQ(bb.y1, 6);

  RasterMask one(3, 3);
  one.set(1, 1);
  const auto p = extract_contour(one);
  ASSERT_EQ(p.size(), 4u);
  EXPECT_DOUBLE_EQ(polygon_area(p), 1.0);

  try {
    extract_contour(RasterMask(3, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyComponent);
  }
}

TEST(ExtractContour, EnclosesComponentAndMatchesTriangleArea)
{
  Rng rng(17);
  for (int t = 0; t < 30; ++t) {
    const Point2 c{100, 100};
    Polygon tri;
    for (int k = 0; k < 3; ++k) {
      const double ang = deg_to_rad(k * 120.0 + rng.uniform(-25, 25));
      const double r = rng.uniform(40, 80);
      tri.vertices.push_back({c.x + r * std::cos(ang), c.y + r * std::sin(ang)});
    }
    const auto mask = largest_component(rasterize(tri, 200, 200));
    const auto contour = extract_contour(mask);
    // Pixel-corner contour area equals the pixel count of a hole-free blob.
    EXPECT_DOUBLE_EQ(polygon_area(contour), static_cast<double>(mask.count()));
    EXPECT_NEAR(polygon_area(contour) / polygon_area(tri), 1.0, 0.05);
    // Every pixel center is enclosed.
    for (int y = 0; y < 200; y += 3) {
      for (int x = 0; x < 200; x += 3) {
        if (mask.at(x, y)) {
          EXPECT_TRUE(oracle_inside(contour, {x + 0.5, y + 0.5}));
        }
      }
    }
  }
}

TEST(SimplifyPolygon, DenseSquareRecoversCorners)
{
  Polygon dense;
  const double side = 100.0;
  const Point2 corners[4] = {{10, 10}, {110, 10}, {110, 110}, {10, 110}};
  for (int k = 0; k < 4; ++k)
    for (int i = 0; i < 100; ++i) {
      const Point2 a = corners[k], b = corners[(k + 1) % 4];
      dense.vertices.push_back(a + (b - a) * (i / side));
    }
  ASSERT_EQ(dense.size(), 400u);
  const auto s = simplify_polygon(dense, 0.02);
  ASSERT_EQ(s.size(), 4u);
  for (auto corner : corners) {
    double best = 1e9;
    for (auto v : s.vertices) best = std::min(best, distance(v, corner));
    EXPECT_LE(best, 1.0);
  }
}

TEST(SimplifyPolygon, MinimalTriangleUnchangedAndOctagonKept)
{
  const Polygon tri{{{0, 0}, {10, 0}, {0, 10}}};
  EXPECT_EQ(simplify_polygon(tri), tri);

  Polygon oct;
  const double r = 80;
  for (int k = 0; k < 8; ++k) {
    const Point2 a{r * std::cos(k * std::numbers::pi / 4), r * std::sin(k * std::numbers::pi / 4)};
    const Point2 b{r * std::cos((k + 1) * std::numbers::pi / 4), r * std::sin((k + 1) * std::numbers::pi / 4)};
    for (int i = 0; i < 50; ++i) oct.vertices.push_back(a + (b - a) * (i / 50.0));
  }
  const auto s = simplify_polygon(oct, 0.02);
  ASSERT_EQ(s.size(), 8u);
  for (auto v : s.vertices) EXPECT_NEAR(norm(v), r, 1e-9);
}

TEST(SimplifyPolygon, IdempotentOnceStable)
{
  Rng rng(23);
  for (int t = 0; t < 20; ++t) {
    const auto poly = square_poly(rng.uniform(40, 90), {100, 100}, rng.uniform(0, 90));
    const auto once = simplify_polygon(extract_contour(largest_component(rasterize(poly, 200, 200))));
    EXPECT_EQ(simplify_polygon(once), once);
  }
  EXPECT_THROW(simplify_polygon(Polygon{{{0, 0}, {1, 0}}}), Error);
}

TEST(ClassifyShape, Examples)
{
  EXPECT_EQ(classify_shape(Polygon{{{0, 0}, {4, 0}, {0, 4}}}), ShapeClass::Triangle);
  EXPECT_EQ(classify_shape(square_poly(1.0, {0.5, 0.5}, 30.0)), ShapeClass::Square);
  EXPECT_EQ(classify_shape(Polygon{{{0, 0}, {4, 0}, {6, 2}, {2, 2}}}), ShapeClass::Parallelogram);
  EXPECT_EQ(classify_shape(Polygon{{{0, 0}, {2, 0}, {2, 1}, {0, 1}}}), ShapeClass::Unknown);
  EXPECT_EQ(classify_shape(Polygon{{{0, 0}, {4, 0}, {5, 3}, {1, 1}}}), ShapeClass::Unknown);
  EXPECT_EQ(classify_shape(Polygon{{{0, 0}, {1, 0}, {2, 1}, {1, 2}, {0, 1}}}), ShapeClass::Unknown);
}

TEST(ClassifyShape, InvariantUnderRigidMotionAndScale)
{
  Rng rng(29);
  for (int t = 0; t < 200; ++t) {
    const int id = static_cast<int>(rng.below(kPieceCount));
    const auto& base = canonical_pieces()[id];
    const auto expected = classify_shape(base);
    EXPECT_EQ(expected, shape_of(kPieceKinds[id]));
    const double scale = rng.uniform(0.1, 300);
    auto moved = transform_polygon(scale_polygon(base, scale, {0, 0}), rng.uniform(-720, 720), {0.3, 0.2},
                                   {rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3)});
    EXPECT_EQ(classify_shape(moved), expected);
  }
}

TEST(TransformPolygon, IdentityRotationAndIsometry)
{
  const Polygon p{{{1, 2}, {4, 2}, {3, 5}}};
  EXPECT_EQ(transform_polygon(p, 0.0, {}, {0, 0}), p);
  const Point2 c = centroid(p);
  const auto r = transform_polygon(p, 90.0, c, {0, 0});
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Point2 d = p[i] - c;
    EXPECT_NEAR(r[i].x, c.x - d.y, 1e-9);
    EXPECT_NEAR(r[i].y, c.y + d.x, 1e-9);
  }
  Rng rng(31);
  for (int t = 0; t < 100; ++t) {
    const auto q = transform_polygon(p, rng.uniform(-360, 360), {rng.uniform(-9, 9), rng.uniform(-9, 9)},
                                     {rng.uniform(-50, 50), rng.uniform(-50, 50)});
    EXPECT_LT(std::abs(polygon_area(q) - polygon_area(p)), 1e-9 * polygon_area(p));
  }
}

TEST(Dilate, GrowsBySquareRadius)
{
  RasterMask m(11, 11);
  m.set(5, 5);
  const auto d = dilate(m, 2);
  EXPECT_EQ(d.count(), 25);
  EXPECT_TRUE(d.at(3, 3));
  EXPECT_FALSE(d.at(2, 5));
}
