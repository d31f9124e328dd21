#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpb/contour.hpp"
#include "fpb/error.hpp"
#include "fpb/geom.hpp"
#include "fpb/pieces.hpp"
#include "fpb/raster.hpp"
#include "fpb/rng.hpp"

namespace fpb {

enum class TangramVariant { FadeIn, Rotation, Translation };

constexpr std::string_view to_string(TangramVariant v) noexcept
{
  switch (v) {
    case TangramVariant::FadeIn: return "fade_in";
    case TangramVariant::Rotation: return "rotation";
    case TangramVariant::Translation: return "translation";
  }
  return "?";
}

inline TangramVariant tangram_variant_from_string(std::string_view s)
{
  if (s == "fade_in") return TangramVariant::FadeIn;
  if (s == "rotation") return TangramVariant::Rotation;
  if (s == "translation") return TangramVariant::Translation;
  fail(ErrorCode::ParseError, "unknown tangram variant '" + std::string(s) + "'");
}

constexpr std::array<TangramVariant, 3> kTangramVariants{TangramVariant::FadeIn, TangramVariant::Rotation,
                                                         TangramVariant::Translation};

/// Target polygons of the seven pieces in layout units (the full square has
/// area 1), indexed by piece id.
struct TangramLayout {
  std::string name;
  std::array<Polygon, kPieceCount> pieces;
};

constexpr double kLayoutSnap = 1e6;
constexpr double kLayoutTolerance = 1e-4;

inline double snap_coordinate(double v) noexcept
{
  const double s = std::round(v * kLayoutSnap) / kLayoutSnap;
  return s == 0.0 ? 0.0 : s;  // no negative zero
}

// ---------------------------------------------------------------------------
// Pose recovery

/// Rotation (about the canonical centroid) and translation that carry the
/// kind's canonical polygon onto `target`.
struct PoseFit {
  double rotate_deg = 0.0;
  Point2 translate;
};

namespace detail {

inline bool match_rotation(const Polygon& canon, const Polygon& target, double tol, PoseFit& out)
{
  const std::size_t n = canon.size();
  if (target.size() != n) return false;
  const Point2 cc = centroid(canon), ct = centroid(target);
  for (std::size_t k = 0; k < n; ++k) {
    const Point2 ec = canon[1] - canon[0];
    const Point2 et = target[(1 + k) % n] - target[k];
    double deg = rad_to_deg(std::atan2(et.y, et.x) - std::atan2(ec.y, ec.x));
    deg = std::fmod(deg, 360.0);
    if (deg < 0) deg += 360.0;
    // Layouts are usually built on a 45-degree lattice; keep those exact.
    const double q = std::round(deg / 45.0) * 45.0;
    if (std::abs(deg - q) < 1e-6) deg = std::fmod(q, 360.0);
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      const Point2 p = rotate_point(canon[i], deg, cc) + (ct - cc);
      ok = distance(p, target[(i + k) % n]) <= tol;
    }
    if (ok) {
      out = {deg, ct - cc};
      return true;
    }
  }
  return false;
}

}  // namespace detail

inline PoseFit recover_pose(PieceKind kind, const Polygon& poly, double tol = kLayoutTolerance)
{
  if (distinct_vertex_count(poly) != poly.size()) fail(ErrorCode::ParseError, "piece has repeated vertices");
  const Polygon target = normalize_winding(poly);
  const Polygon& canon = canonical_polygon(kind);
  PoseFit fit;
  if (detail::match_rotation(canon, target, tol, fit)) return fit;
  if (kind == PieceKind::Parallelogram) {
    Polygon mirrored = canon;
    for (auto& v : mirrored.vertices) v.x = -v.x;
    if (detail::match_rotation(normalize_winding(mirrored), target, tol, fit)) {
      fail(ErrorCode::ParseError, "mirrored parallelogram is not supported");
    }
  }
  fail(ErrorCode::ParseError, "polygon does not match a rigid motion of the " + std::string(to_string(kind)));
}

// ---------------------------------------------------------------------------
// Validation and board placement

/// Every piece must be a rigid copy of its canonical polygon and no two
/// pieces may overlap with positive area.
inline void validate_layout(const TangramLayout& layout)
{
  for (int i = 0; i < kPieceCount; ++i) recover_pose(kPieceKinds[i], layout.pieces[i]);
  for (int i = 0; i < kPieceCount; ++i) {
    for (int j = i + 1; j < kPieceCount; ++j) {
      if (convex_overlap(layout.pieces[i], layout.pieces[j], kLayoutTolerance)) {
        fail(ErrorCode::InvalidLayout, "pieces " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
      }
    }
  }
}

struct PixelRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  bool contains(double x, double y) const noexcept { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

constexpr int kTangramSide = 256;
constexpr int kBoardMargin = 16;
constexpr double kMaxBoardScale = 100.0;

inline int canvas_width(TangramVariant v) noexcept { return v == TangramVariant::FadeIn ? kTangramSide : 2 * kTangramSide; }
inline int canvas_height(TangramVariant) noexcept { return kTangramSide; }

inline PixelRect board_region(TangramVariant v) noexcept
{
  return v == TangramVariant::FadeIn ? PixelRect{0, 0, kTangramSide, kTangramSide}
                                     : PixelRect{kTangramSide, 0, 2 * kTangramSide, kTangramSide};
}

inline PixelRect sidebar_region() noexcept { return {0, 0, kTangramSide, kTangramSide}; }

/// Layout units to canvas pixels: px = origin + scale * u.
struct BoardPlacement {
  double scale = kMaxBoardScale;
  Point2 origin;
  Point2 to_canvas(Point2 u) const noexcept { return origin + u * scale; }
};

inline BBox layout_bounds(const TangramLayout& layout)
{
  std::vector<Point2> all;
  for (const auto& p : layout.pieces) all.insert(all.end(), p.vertices.begin(), p.vertices.end());
  return bounding_box(std::span<const Point2>(all));
}

/// Centres the layout in the board region at up to 100 px per unit. The
/// origin carries a quarter/eighth pixel offset so axis-aligned and diagonal
/// edges on the layout lattice never pass exactly through pixel centres.
inline BoardPlacement board_placement(const TangramLayout& layout, TangramVariant variant)
{
  const BBox b = layout_bounds(layout);
  const double extent = std::max(b.width(), b.height());
  const PixelRect region = board_region(variant);
  BoardPlacement bp;
  bp.scale = std::min(kMaxBoardScale, (kTangramSide - 2.0 * kBoardMargin) / extent);
  const Point2 centre{(region.x0 + region.x1) / 2.0, (region.y0 + region.y1) / 2.0};
  const Point2 o = centre - Point2{(b.x0 + b.x1) / 2.0, (b.y0 + b.y1) / 2.0} * bp.scale;
  bp.origin = {std::floor(o.x) + 0.25, std::floor(o.y) + 0.125};
  return bp;
}

inline Polygon to_canvas(const Polygon& units, const BoardPlacement& bp)
{
  Polygon out = units;
  for (auto& v : out.vertices) v = bp.to_canvas(v);
  return out;
}

/// True when the rasterised target polygons are pairwise disjoint on the
/// variant's canvas.
inline bool raster_disjoint(const TangramLayout& layout, TangramVariant variant)
{
  const BoardPlacement bp = board_placement(layout, variant);
  const int w = canvas_width(variant), h = canvas_height(variant);
  RasterMask acc(w, h);
  bool clash = false;
  for (const auto& p : layout.pieces) {
    for_each_span(to_canvas(p, bp), w, h, [&](int y, int x0, int x1) {
      auto* row = acc.row(y);
      for (int x = x0; x < x1; ++x) {
        clash = clash || row[x];
        row[x] = 1;
      }
    });
  }
  return !clash;
}

// ---------------------------------------------------------------------------
// Layout files

inline nlohmann::json layout_to_json(const TangramLayout& layout)
{
  nlohmann::json pieces = nlohmann::json::array();
  for (int i = 0; i < kPieceCount; ++i) {
    nlohmann::json verts = nlohmann::json::array();
    for (auto v : layout.pieces[i].vertices) verts.push_back({v.x, v.y});
    pieces.push_back({{"kind", to_string(kPieceKinds[i])}, {"vertices", verts}});
  }
  return {{"schema_version", 1}, {"name", layout.name}, {"pieces", pieces}};
}

/// Parses the layout schema. Pieces may appear in any order; pieces of the
/// same kind take piece ids in order of appearance.
inline TangramLayout layout_from_json(const nlohmann::json& j)
{
  try {
    if (!j.is_object()) fail(ErrorCode::ParseError, "layout must be a JSON object");
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != 1) {
      fail(ErrorCode::ParseError, "unsupported layout schema_version");
    }
    TangramLayout out;
    out.name = j.value("name", std::string{});
    const auto& pieces = j.at("pieces");
    if (!pieces.is_array() || pieces.size() != kPieceCount) fail(ErrorCode::ParseError, "layout needs exactly 7 pieces");
    std::array<bool, kPieceCount> used{};
    for (const auto& p : pieces) {
      const PieceKind kind = piece_kind_from_string(p.at("kind").get<std::string>());
      int id = -1;
      for (int i = 0; i < kPieceCount && id < 0; ++i) {
        if (kPieceKinds[i] == kind && !used[i]) id = i;
      }
      if (id < 0) fail(ErrorCode::ParseError, "too many pieces of kind " + std::string(to_string(kind)));
      used[id] = true;
      Polygon poly;
      for (const auto& v : p.at("vertices")) {
        if (!v.is_array() || v.size() != 2) fail(ErrorCode::ParseError, "vertex must be [x, y]");
        poly.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
      }
      if (poly.size() < 3) fail(ErrorCode::ParseError, "piece needs at least 3 vertices");
      out.pieces[id] = poly;
    }
    validate_layout(out);
    return out;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("layout schema: ") + e.what());
  }
}

inline std::string read_text_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text)
{
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

inline TangramLayout layout_from_silhouette_file(const std::filesystem::path& path)
{
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  TangramLayout l = layout_from_json(j);
  if (l.name.empty()) l.name = path.stem().string();
  return l;
}

inline void write_layout_file(const TangramLayout& layout, const std::filesystem::path& path)
{
  write_text_file(path, layout_to_json(layout).dump(2) + "\n");
}

/// All *.json layouts in a directory, sorted by file name.
inline std::vector<TangramLayout> load_layout_dir(const std::filesystem::path& dir)
{
  if (!std::filesystem::is_directory(dir)) fail(ErrorCode::IoError, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<TangramLayout> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(layout_from_silhouette_file(f));
  return out;
}

/// The seven pieces reassembled into the unit square.
inline TangramLayout square_layout()
{
  TangramLayout l;
  l.name = "square";
  for (int i = 0; i < kPieceCount; ++i) l.pieces[i] = canonical_pieces()[i];
  return l;
}

// ---------------------------------------------------------------------------
// Synthetic layouts

struct LayoutGenOptions {
  double max_extent = 2.2;
  int attempts_per_piece = 300;
};

namespace detail {

inline Polygon snapped(Polygon p)
{
  for (auto& v : p.vertices) v = {snap_coordinate(v.x), snap_coordinate(v.y)};
  return p;
}

inline double edge_angle_deg(Point2 e) { return rad_to_deg(std::atan2(e.y, e.x)); }

inline bool try_generate_layout(Rng& rng, const LayoutGenOptions& opt, TangramLayout& out)
{
  std::vector<int> order{0, 1, 2, 3, 4, 5, 6};
  rng.shuffle(order);
  std::vector<int> placed;
  std::array<Polygon, kPieceCount> poly;
  {
    const int first = order[0];
    const Polygon& c = canonical_pieces()[first];
    poly[first] = transform_polygon(c, 45.0 * static_cast<double>(rng.below(8)), centroid(c), Point2{0, 0} - centroid(c));
    placed.push_back(first);
  }
  for (std::size_t oi = 1; oi < order.size(); ++oi) {
    const int id = order[oi];
    const Polygon& canon = canonical_pieces()[id];
    bool done = false;
    for (int attempt = 0; attempt < opt.attempts_per_piece && !done; ++attempt) {
      const Polygon& host = poly[placed[rng.below(placed.size())]];
      const std::size_t hi = rng.below(host.size());
      const Point2 a = host[hi], b = host[(hi + 1) % host.size()];
      const std::size_t ni = rng.below(canon.size());
      const Point2 ec = canon[(ni + 1) % canon.size()] - canon[ni];
      // Rotate so the new edge runs antiparallel to the host edge.
      double deg = edge_angle_deg(a - b) - edge_angle_deg(ec);
      deg = std::round(deg / 45.0) * 45.0;
      const Polygon rotated = transform_polygon(canon, deg, {0, 0}, {0, 0});
      const Point2 c = rotated[ni], d = rotated[(ni + 1) % rotated.size()];
      Point2 shift;
      switch (rng.below(3)) {
        case 0: shift = b - c; break;
        case 1: shift = a - d; break;
        default: shift = (a + b) * 0.5 - (c + d) * 0.5; break;
      }
      const Polygon cand = snapped(transform_polygon(rotated, 0.0, {}, shift));
      bool clash = false;
      for (int p : placed) {
        if (convex_overlap(cand, poly[p], kLayoutTolerance)) {
          clash = true;
          break;
        }
      }
      if (clash) continue;
      std::vector<Point2> all = cand.vertices;
      for (int p : placed) all.insert(all.end(), poly[p].vertices.begin(), poly[p].vertices.end());
      const BBox bb = bounding_box(std::span<const Point2>(all));
      if (std::max(bb.width(), bb.height()) > opt.max_extent) continue;
      poly[id] = cand;
      placed.push_back(id);
      done = true;
    }
    if (!done) return false;
  }
  // Move the bounding box to the origin.
  std::vector<Point2> all;
  for (const auto& p : poly) all.insert(all.end(), p.vertices.begin(), p.vertices.end());
  const BBox bb = bounding_box(std::span<const Point2>(all));
  for (int i = 0; i < kPieceCount; ++i) {
    out.pieces[i] = snapped(transform_polygon(poly[i], 0.0, {}, Point2{-bb.x0, -bb.y0}));
  }
  try {
    validate_layout(out);
  } catch (const Error&) {
    return false;
  }
  for (TangramVariant v : kTangramVariants) {
    if (!raster_disjoint(out, v)) return false;
  }
  return true;
}

}  // namespace detail

/// Random connected arrangement: every piece after the first shares part of
/// an edge with an earlier piece, orientations are multiples of 45 degrees.
inline TangramLayout generate_layout(std::uint64_t seed, const LayoutGenOptions& opt = {})
{
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(derive_seed(seed, "layout", attempt));
    TangramLayout l;
    if (detail::try_generate_layout(rng, opt, l)) return l;
  }
}

/// Canonical fingerprint of the silhouette (union of pieces) so layouts that
/// differ only in how pieces fill the same outline compare equal.
inline std::string silhouette_key(const TangramLayout& layout)
{
  constexpr double s = 40.0;
  const BBox b = layout_bounds(layout);
  const int w = static_cast<int>(std::ceil(b.width() * s)) + 1;
  const int h = static_cast<int>(std::ceil(b.height() * s)) + 1;
  RasterMask m(w, h);
  for (const auto& p : layout.pieces) {
    Polygon q = p;
    for (auto& v : q.vertices) v = {(v.x - b.x0) * s + 0.25, (v.y - b.y0) * s + 0.125};
    for_each_span(q, w, h, [&](int y, int x0, int x1) {
      for (int x = x0; x < x1; ++x) m.set(x, y, true);
    });
  }
  std::string key = std::to_string(w) + "x" + std::to_string(h) + ":";
  key.reserve(key.size() + m.bits().size());
  for (auto bit : m.bits()) key.push_back(bit ? '1' : '0');
  return key;
}

/// `count` distinct layouts drawn from a seeded stream, skipping any whose
/// silhouette key is already in `taken` (which is updated).
inline std::vector<TangramLayout> generate_layout_set(std::uint64_t seed, int count, std::set<std::string>& taken,
                                                      std::string_view name_prefix, const LayoutGenOptions& opt = {})
{
  std::vector<TangramLayout> out;
  for (std::uint64_t i = 0; static_cast<int>(out.size()) < count; ++i) {
    TangramLayout l = generate_layout(derive_seed(seed, name_prefix, i), opt);
    if (!taken.insert(silhouette_key(l)).second) continue;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d", static_cast<int>(out.size()));
    l.name = std::string(name_prefix) + "_" + buf;
    out.push_back(std::move(l));
  }
  return out;
}

// ---------------------------------------------------------------------------
// SVG polygon import

/// Converts an SVG drawing of seven <polygon points="..."> elements into a
/// layout. Scale is normalised so the pieces total unit area; kinds are
/// assigned by vertex count, area and angles.
inline TangramLayout layout_from_svg(std::string_view svg, std::string name)
{
  static const std::regex poly_re(R"re(<polygon\b[^>]*\bpoints\s*=\s*"([^"]*)")re", std::regex::icase);
  static const std::regex num_re(R"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)");
  std::vector<Polygon> polys;
  const std::string text(svg);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), poly_re); it != std::sregex_iterator(); ++it) {
    const std::string pts = (*it)[1].str();
    std::vector<double> nums;
    for (auto n = std::sregex_iterator(pts.begin(), pts.end(), num_re); n != std::sregex_iterator(); ++n) {
      nums.push_back(std::stod(n->str()));
    }
    if (nums.size() % 2 != 0) fail(ErrorCode::ParseError, "odd coordinate count in polygon points");
    Polygon p;
    for (std::size_t i = 0; i < nums.size(); i += 2) {
      const Point2 v{nums[i], nums[i + 1]};
      if (p.vertices.empty() || !(p.vertices.back() == v)) p.vertices.push_back(v);
    }
    if (p.size() > 1 && p.vertices.front() == p.vertices.back()) p.vertices.pop_back();
    polys.push_back(normalize_winding(p));
  }
  if (polys.size() != kPieceCount) fail(ErrorCode::ParseError, "expected 7 polygons, found " + std::to_string(polys.size()));
  double total = 0.0;
  for (const auto& p : polys) total += polygon_area(p);
  const double k = 1.0 / std::sqrt(total);
  std::vector<Point2> all;
  for (const auto& p : polys) all.insert(all.end(), p.vertices.begin(), p.vertices.end());
  const BBox bb = bounding_box(std::span<const Point2>(all));
  for (auto& p : polys) {
    for (auto& v : p.vertices) v = {snap_coordinate((v.x - bb.x0) * k), snap_coordinate((v.y - bb.y0) * k)};
  }
  nlohmann::json pieces = nlohmann::json::array();
  for (const auto& p : polys) {
    const double frac = polygon_area(p);
    std::string kind;
    if (p.size() == 3) {
      kind = frac > 3.0 / 16 ? "big_tri" : frac > 3.0 / 32 ? "medium_tri" : "small_tri";
    } else if (p.size() == 4) {
      const auto ang = interior_angles(p);
      const bool right = std::all_of(ang.begin(), ang.end(), [](double a) { return std::abs(a - 90.0) < 1.0; });
      kind = right ? "square" : "parallelogram";
    } else {
      fail(ErrorCode::ParseError, "polygon with " + std::to_string(p.size()) + " vertices is not a tangram piece");
    }
    nlohmann::json verts = nlohmann::json::array();
    for (auto v : p.vertices) verts.push_back({v.x, v.y});
    pieces.push_back({{"kind", kind}, {"vertices", verts}});
  }
  TangramLayout l = layout_from_json({{"schema_version", 1}, {"name", name}, {"pieces", pieces}});
  return l;
}

}  // namespace fpb
