#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fpb/error.hpp"
#include "fpb/geom.hpp"
#include "fpb/image.hpp"
#include "fpb/pieces.hpp"
#include "fpb/raster.hpp"
#include "fpb/rng.hpp"
#include "fpb/tangram.hpp"

namespace fpb {

/// Orientation (degrees relative to the canonical polygon), centroid position
/// in canvas pixels, and pixels per layout unit.
struct Pose {
  double rotate_deg = 0.0;
  Point2 translate;
  double scale = 1.0;
  friend bool operator==(const Pose&, const Pose&) = default;
};

struct PieceRecord {
  int piece_id = 0;
  PieceKind kind = PieceKind::BigTriangle;
  Polygon canonical_poly;  // layout units
  ColorRGB color;
  Pose target_pose;
  Pose initial_pose;
  Polygon target_polygon;  // canvas pixels
  std::int64_t ref_area = 0;  // rasterised area at the initial pose
  ShapeClass ref_shape = ShapeClass::Unknown;
};

struct PieceWindow {
  int piece_id = 0;
  int first_frame = 0;
  int frame_count = 0;
  int last_frame() const noexcept { return first_frame + frame_count - 1; }
};

struct TangramScene {
  TangramVariant variant = TangramVariant::FadeIn;
  TangramLayout layout;
  std::array<PieceRecord, kPieceCount> pieces;
  RasterMask silhouette;
  int canvas_w = 0;
  int canvas_h = 0;
  PixelRect board;
  double board_scale = 0.0;
  double sidebar_scale = 1.0;  // sidebar px-per-unit divided by board px-per-unit
  std::array<int, kPieceCount> order{};
  int total_frames = 0;
  std::uint64_t seed = 0;
};

constexpr int kMinWindowFrames = 4;
constexpr int kSidebarGap = 4;

inline int default_total_frames(TangramVariant v, std::uint64_t seed)
{
  switch (v) {
    case TangramVariant::FadeIn: return 81;
    case TangramVariant::Rotation: return 201;
    case TangramVariant::Translation: {
      Rng rng(derive_seed(seed, "length"));
      return 61 + 4 * static_cast<int>(rng.below(6));
    }
  }
  return 81;
}

/// Fixed Fade-In palette by piece id: big triangles blue and orange, medium
/// green, small purple and yellow, square gray, parallelogram red.
inline const std::array<ColorRGB, kPieceCount>& fade_in_palette()
{
  static const std::array<ColorRGB, kPieceCount> p{{
      {30, 80, 230}, {255, 140, 0}, {0, 170, 60}, {140, 40, 200}, {240, 210, 0}, {128, 128, 128}, {220, 20, 30},
  }};
  return p;
}

/// Candidate colours for the sidebar variants: channels in {0, 128, 255},
/// black and white excluded, so any two differ by at least 127 in some channel.
inline std::vector<ColorRGB> random_palette_pool()
{
  std::vector<ColorRGB> out;
  constexpr std::uint8_t levels[3] = {0, 128, 255};
  for (auto r : levels) {
    for (auto g : levels) {
      for (auto b : levels) {
        const ColorRGB c{r, g, b};
        if (c == ColorRGB{0, 0, 0} || c == ColorRGB{255, 255, 255}) continue;
        out.push_back(c);
      }
    }
  }
  return out;
}

inline std::array<ColorRGB, kPieceCount> scene_palette(TangramVariant v, std::uint64_t seed)
{
  if (v == TangramVariant::FadeIn) return fade_in_palette();
  auto pool = random_palette_pool();
  Rng rng(derive_seed(seed, "colors"));
  rng.shuffle(pool);
  std::array<ColorRGB, kPieceCount> out{};
  std::copy_n(pool.begin(), kPieceCount, out.begin());
  return out;
}

/// Placement order: descending area, ties by piece id.
inline std::array<int, kPieceCount> placement_order()
{
  std::array<int, kPieceCount> o{0, 1, 2, 3, 4, 5, 6};
  std::stable_sort(o.begin(), o.end(),
                   [](int a, int b) { return area_fraction(kPieceKinds[a]) > area_fraction(kPieceKinds[b]); });
  return o;
}

/// Splits frames 0..total-1 into consecutive windows in placement order;
/// earlier windows take the remainder frames.
inline std::vector<PieceWindow> piece_windows(const std::array<int, kPieceCount>& order, int total_frames)
{
  if (total_frames < kPieceCount * kMinWindowFrames) {
    fail(ErrorCode::ScheduleError, std::to_string(total_frames) + " frames leave a piece window under " +
                                       std::to_string(kMinWindowFrames) + " frames");
  }
  std::vector<PieceWindow> out;
  const int base = total_frames / kPieceCount, extra = total_frames % kPieceCount;
  int next = 0;
  for (int k = 0; k < kPieceCount; ++k) {
    const int n = base + (k < extra ? 1 : 0);
    out.push_back({order[k], next, n});
    next += n;
  }
  return out;
}

inline Polygon posed_polygon(const PieceRecord& p, const Pose& pose)
{
  if (pose == p.target_pose) return p.target_polygon;
  const Point2 c = p.target_pose.translate;
  Polygon out = p.target_polygon;
  const double k = pose.scale / p.target_pose.scale;
  const double dr = pose.rotate_deg - p.target_pose.rotate_deg;
  for (auto& v : out.vertices) v = pose.translate + (rotate_point(v, dr, c) - c) * k;
  return out;
}

namespace detail {

inline double circumradius(const Polygon& poly, Point2 about)
{
  double r = 0.0;
  for (auto v : poly.vertices) r = std::max(r, distance(v, about));
  return r;
}

// Shelf packing of circumscribed circles, left to right then top to bottom.
inline bool pack_sidebar(const std::vector<double>& radii, std::vector<Point2>& centres)
{
  const PixelRect sb = sidebar_region();
  centres.clear();
  double x = sb.x0 + kSidebarGap, y = sb.y0 + kSidebarGap, row_h = 0.0;
  for (double r : radii) {
    const double d = 2.0 * std::ceil(r);
    if (x + d > sb.x1 - kSidebarGap && x > sb.x0 + kSidebarGap) {
      y += row_h + kSidebarGap;
      x = sb.x0 + kSidebarGap;
      row_h = 0.0;
    }
    if (x + d > sb.x1 - kSidebarGap || y + d > sb.y1 - kSidebarGap) return false;
    centres.push_back({std::round(x + d / 2.0) + 0.25, std::round(y + d / 2.0) + 0.125});
    x += d + kSidebarGap;
    row_h = std::max(row_h, d);
  }
  return true;
}

inline double signed_offset(double deg)
{
  double d = std::fmod(deg, 360.0);
  if (d > 180.0) d -= 360.0;
  if (d <= -180.0) d += 360.0;
  return d;
}

}  // namespace detail

inline RasterMask rasterize_silhouette(const std::array<PieceRecord, kPieceCount>& pieces, int w, int h)
{
  RasterMask m(w, h);
  for (const auto& p : pieces) {
    for_each_span(p.target_polygon, w, h, [&](int y, int x0, int x1) {
      auto* row = m.row(y);
      for (int x = x0; x < x1; ++x) row[x] = 1;
    });
  }
  return m;
}

inline TangramScene build_scene(const TangramLayout& layout, TangramVariant variant, std::uint64_t seed,
                                std::optional<int> total_frames = std::nullopt)
{
  validate_layout(layout);
  TangramScene s;
  s.variant = variant;
  s.layout = layout;
  s.seed = seed;
  s.canvas_w = canvas_width(variant);
  s.canvas_h = canvas_height(variant);
  s.board = board_region(variant);
  s.order = placement_order();
  s.total_frames = total_frames.value_or(default_total_frames(variant, seed));
  piece_windows(s.order, s.total_frames);

  const BoardPlacement bp = board_placement(layout, variant);
  s.board_scale = bp.scale;
  const auto colors = scene_palette(variant, seed);
  Rng angle_rng(derive_seed(seed, "angles"));

  RasterMask acc(s.canvas_w, s.canvas_h);
  for (int i = 0; i < kPieceCount; ++i) {
    PieceRecord& p = s.pieces[i];
    p.piece_id = i;
    p.kind = kPieceKinds[i];
    p.canonical_poly = canonical_pieces()[i];
    p.color = colors[i];
    p.ref_shape = shape_of(p.kind);
    p.target_polygon = normalize_winding(to_canvas(layout.pieces[i], bp));
    const PoseFit fit = recover_pose(p.kind, layout.pieces[i]);
    p.target_pose = {fit.rotate_deg, centroid(p.target_polygon), bp.scale};
    const RasterMask m = rasterize(p.target_polygon, s.canvas_w, s.canvas_h);
    if (intersection_count(acc, m) != 0) {
      fail(ErrorCode::InvalidLayout, "piece " + std::to_string(i) + " overlaps an earlier piece on the raster");
    }
    merge_into(acc, m);
  }
  s.silhouette = std::move(acc);

  if (variant == TangramVariant::FadeIn) {
    for (auto& p : s.pieces) p.initial_pose = p.target_pose;
  } else {
    std::array<double, kPieceCount> offset{};
    for (int i = 0; i < kPieceCount; ++i) {
      offset[i] = variant == TangramVariant::Rotation ? 15.0 * (1 + static_cast<double>(angle_rng.below(23))) : 0.0;
    }
    std::vector<Point2> centres;
    double k = 1.0;
    for (;; k -= 0.05) {
      if (k < 0.05) fail(ErrorCode::InvalidLayout, "pieces do not fit in the sidebar");
      std::vector<double> radii;
      for (int id : s.order) {
        const auto& p = s.pieces[id];
        radii.push_back(k * detail::circumradius(p.target_polygon, p.target_pose.translate));
      }
      if (detail::pack_sidebar(radii, centres)) break;
    }
    s.sidebar_scale = k;
    for (int slot = 0; slot < kPieceCount; ++slot) {
      auto& p = s.pieces[s.order[slot]];
      p.initial_pose = {p.target_pose.rotate_deg + offset[p.piece_id], centres[slot], p.target_pose.scale * k};
    }
  }
  for (auto& p : s.pieces) {
    std::int64_t a = 0;
    for_each_span(posed_polygon(p, p.initial_pose), s.canvas_w, s.canvas_h,
                  [&](int, int x0, int x1) { a += x1 - x0; });
    p.ref_area = a;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Rendering

/// Overrides applied by the perturbation tools; the golden renderer uses none.
struct RenderOverrides {
  int piece = -1;              // piece affected, -1 for none
  int from_frame = 0;          // first frame the override applies to
  double scale = 1.0;          // scale about the piece centroid
  double rotate_deg = 0.0;     // extra rotation about the piece centroid
  bool draw_beneath = false;   // draw the piece below the other pieces
  bool draw_on_top = false;    // draw the piece above the other pieces
  std::optional<ColorRGB> color;
  bool hidden = false;
};

enum class PieceState { Pending, Active, Placed };

struct PieceFrameState {
  PieceState state = PieceState::Pending;
  double progress = 0.0;  // 0..1 within the active window
};

inline PieceFrameState piece_state_at(const std::vector<PieceWindow>& windows, int piece_id, int frame)
{
  for (const auto& w : windows) {
    if (w.piece_id != piece_id) continue;
    if (frame < w.first_frame) return {PieceState::Pending, 0.0};
    if (frame >= w.last_frame()) return {PieceState::Placed, 1.0};
    return {PieceState::Active, static_cast<double>(frame - w.first_frame) / (w.frame_count - 1)};
  }
  return {};
}

/// Pose of a piece at local progress p. Rotation spins in place during the
/// first half and then slides; Translation slides for the whole window.
inline Pose pose_at(const TangramScene& s, const PieceRecord& p, double t)
{
  if (t <= 0.0) return p.initial_pose;
  if (t >= 1.0) return p.target_pose;
  auto lerp = [](double a, double b, double u) { return a + (b - a) * u; };
  const Pose& a = p.initial_pose;
  const Pose& b = p.target_pose;
  double move = t;
  double rot = b.rotate_deg;
  if (s.variant == TangramVariant::Rotation) {
    const double off = detail::signed_offset(a.rotate_deg - b.rotate_deg);
    if (t < 0.5) {
      return {b.rotate_deg + off * (1.0 - 2.0 * t), a.translate, a.scale};
    }
    move = 2.0 * t - 1.0;
  } else if (s.variant == TangramVariant::FadeIn) {
    return b;
  }
  return {rot, {lerp(a.translate.x, b.translate.x, move), lerp(a.translate.y, b.translate.y, move)},
          lerp(a.scale, b.scale, move)};
}

inline Frame render_tangram_frame(const TangramScene& s, const std::vector<PieceWindow>& windows, int frame,
                                  const RenderOverrides& ov = {})
{
  Frame img(s.canvas_w, s.canvas_h);
  img.fill_mask(s.silhouette, {0, 0, 0});
  auto overridden = [&](int id) { return ov.piece == id && frame >= ov.from_frame; };
  auto draw = [&](const PieceRecord& p, const Pose& pose, double alpha) {
    ColorRGB c = p.color;
    Polygon poly = posed_polygon(p, pose);
    if (overridden(p.piece_id)) {
      if (ov.hidden) return;
      if (ov.color) c = *ov.color;
      if (ov.scale != 1.0) poly = scale_polygon(poly, ov.scale, centroid(poly));
      if (ov.rotate_deg != 0.0) poly = transform_polygon(poly, ov.rotate_deg, centroid(poly), {});
    }
    img.blend_polygon(poly, c, alpha);
  };

  std::vector<int> placed, pending;
  int active = -1;
  double active_t = 0.0;
  for (int id : s.order) {
    const auto st = piece_state_at(windows, id, frame);
    if (st.state == PieceState::Placed) placed.push_back(id);
    if (st.state == PieceState::Pending) pending.push_back(id);
    if (st.state == PieceState::Active) {
      active = id;
      active_t = st.progress;
    }
  }
  // The piece in transit passes beneath every other piece, so placed pieces
  // keep their pixels from placement onwards.
  const bool lifted = ov.piece >= 0 && ov.draw_on_top && frame >= ov.from_frame;
  auto skip = [&](int id) { return lifted && id == ov.piece; };
  if (active >= 0 && s.variant != TangramVariant::FadeIn && !skip(active)) {
    draw(s.pieces[active], pose_at(s, s.pieces[active], active_t), 1.0);
  }
  const bool beneath = ov.piece >= 0 && ov.draw_beneath && frame >= ov.from_frame;
  if (beneath) {
    const auto st = piece_state_at(windows, ov.piece, frame);
    if (st.state == PieceState::Placed) draw(s.pieces[ov.piece], s.pieces[ov.piece].target_pose, 1.0);
  }
  for (int id : placed) {
    if ((beneath && id == ov.piece) || skip(id)) continue;
    draw(s.pieces[id], s.pieces[id].target_pose, 1.0);
  }
  if (s.variant == TangramVariant::FadeIn) {
    if (active >= 0 && !skip(active)) draw(s.pieces[active], s.pieces[active].target_pose, active_t);
  } else {
    for (int id : pending) {
      if (!skip(id)) draw(s.pieces[id], s.pieces[id].initial_pose, 1.0);
    }
  }
  if (lifted) {
    const auto st = piece_state_at(windows, ov.piece, frame);
    const PieceRecord& p = s.pieces[ov.piece];
    if (s.variant == TangramVariant::FadeIn) {
      if (st.state != PieceState::Pending) draw(p, p.target_pose, st.state == PieceState::Placed ? 1.0 : st.progress);
    } else {
      draw(p, pose_at(s, p, st.state == PieceState::Pending ? 0.0 : st.progress), 1.0);
    }
  }
  return img;
}

inline FrameSequence synthesize_assembly_video(const TangramScene& s, int total_frames, const RenderOverrides& ov = {})
{
  const auto windows = piece_windows(s.order, total_frames);
  FrameSequence out;
  out.reserve(static_cast<std::size_t>(total_frames));
  for (int f = 0; f < total_frames; ++f) out.push_back(render_tangram_frame(s, windows, f, ov));
  return out;
}

inline FrameSequence synthesize_assembly_video(const TangramScene& s) { return synthesize_assembly_video(s, s.total_frames); }

}  // namespace fpb
