#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fpb/contour.hpp"
#include "fpb/error.hpp"
#include "fpb/geom.hpp"
#include "fpb/image.hpp"
#include "fpb/manifest.hpp"
#include "fpb/raster.hpp"
#include "fpb/report.hpp"
#include "fpb/tangram.hpp"
#include "fpb/tangram_gen.hpp"

namespace fpb {

enum class ConsistencyMode { Reference, Static };

constexpr std::string_view to_string(ConsistencyMode m) noexcept { return m == ConsistencyMode::Reference ? "reference" : "static"; }

struct TangramEvalParams {
  int delta_col = 60;
  double area_lo = 0.6;
  double area_hi = 1.4;
  double inside_fraction = 0.98;
  int inside_dilation = 2;
  double overlap_fraction = 0.01;
  int silhouette_max_channel = 40;
  double silhouette_min_iou = 0.98;
  int k_samples = 16;
  ConsistencyMode vc_mode = ConsistencyMode::Reference;
  ShapeRules shape_rules;
};

enum class PropSource { Sidebar, GoldenLayout };

constexpr std::string_view to_string(PropSource s) noexcept { return s == PropSource::Sidebar ? "sidebar" : "golden_layout"; }

struct PieceProps {
  ColorRGB color;
  double a0 = 0.0;  // reference area in board pixels
  ShapeClass s0 = ShapeClass::Unknown;
  PropSource source = PropSource::GoldenLayout;
};

using PaletteProps = std::array<PieceProps, kPieceCount>;

struct PieceMasks {
  std::array<RasterMask, kPieceCount> body;  // largest component per colour
  std::array<long, kPieceCount> total{};      // all pixels of the colour
  std::array<long, kPieceCount> debris{};     // pixels outside the body
};

struct PieceVerdict {
  int piece_id = 0;
  bool found = false;
  double area_ratio = 0.0;
  bool shape_ok = false;
  bool inside_ok = false;
  bool overlap = false;
  int u = 0;
  std::vector<std::string> failure_tags;
};

/// Per-pixel palette index: the strictly nearest colour within delta, else -1.
inline std::vector<int> assign_palette(const Frame& frame, const std::array<ColorRGB, kPieceCount>& colors, int delta)
{
  const auto& d = frame.data();
  std::vector<int> out(static_cast<std::size_t>(frame.width()) * frame.height(), -1);
  for (std::size_t p = 0, i = 0; p < out.size(); ++p, i += 3) {
    const ColorRGB c{d[i], d[i + 1], d[i + 2]};
    int best = -1, best_d = delta + 1;
    bool tie = false;
    for (int k = 0; k < kPieceCount; ++k) {
      const int dk = color_distance(c, colors[k]);
      if (dk < best_d) {
        best = k;
        best_d = dk;
        tie = false;
      } else if (dk == best_d) {
        tie = true;
      }
    }
    if (best >= 0 && !tie) out[p] = best;
  }
  return out;
}

inline std::array<ColorRGB, kPieceCount> palette_colors(const PaletteProps& props)
{
  std::array<ColorRGB, kPieceCount> c{};
  for (int i = 0; i < kPieceCount; ++i) c[i] = props[i].color;
  return c;
}

/// Colour masks restricted to `region`, with the largest component as the body.
inline PieceMasks segment_pieces(const Frame& frame, const std::array<ColorRGB, kPieceCount>& colors, int delta,
                                 std::optional<PixelRect> region = std::nullopt)
{
  const int w = frame.width(), h = frame.height();
  const auto idx = assign_palette(frame, colors, delta);
  std::array<RasterMask, kPieceCount> all;
  for (auto& m : all) m = RasterMask(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (region && !region->contains(x + 0.5, y + 0.5)) continue;
      const int k = idx[static_cast<std::size_t>(y) * w + x];
      if (k >= 0) all[k].set(x, y);
    }
  }
  PieceMasks out;
  for (int k = 0; k < kPieceCount; ++k) {
    out.total[k] = all[k].count();
    out.body[k] = largest_component(all[k]);
    out.debris[k] = out.total[k] - out.body[k].count();
  }
  return out;
}

inline PieceMasks segment_pieces(const Frame& frame, const PaletteProps& props, const TangramEvalParams& params = {})
{
  return segment_pieces(frame, palette_colors(props), params.delta_col);
}

/// Reference colour, area and shape of each piece. FadeIn takes them from the
/// golden layout; the sidebar variants measure the pieces waiting in the
/// sidebar of the first frame and rescale areas to board size.
inline PaletteProps extract_palette_props(const Frame& first, const InstanceManifest& im, const TangramEvalParams& params = {})
{
  const TangramScene& s = im.tangram();
  if (first.width() != s.canvas_w || first.height() != s.canvas_h) fail(ErrorCode::ShapeMismatch, "first frame does not match the canvas");
  PaletteProps props;
  for (int i = 0; i < kPieceCount; ++i) {
    for (int j = 0; j < i; ++j) {
      if (s.pieces[i].color == s.pieces[j].color) fail(ErrorCode::PaletteError, "manifest palette repeats a colour");
    }
  }
  if (s.variant == TangramVariant::FadeIn) {
    for (int i = 0; i < kPieceCount; ++i) {
      const auto& p = s.pieces[i];
      props[i] = {p.color, static_cast<double>(rasterize(p.target_polygon, s.canvas_w, s.canvas_h).count()), p.ref_shape,
                  PropSource::GoldenLayout};
    }
    return props;
  }
  std::array<ColorRGB, kPieceCount> colors{};
  for (int i = 0; i < kPieceCount; ++i) colors[i] = s.pieces[i].color;
  const PieceMasks m = segment_pieces(first, colors, params.delta_col, sidebar_region());
  const double k2 = s.sidebar_scale * s.sidebar_scale;
  int found = 0;
  for (int i = 0; i < kPieceCount; ++i) {
    const long a = m.body[i].count();
    if (a == 0) continue;
    ++found;
    const ShapeClass sc = classify_component(m.body[i], params.shape_rules);
    if (sc == ShapeClass::Unknown) fail(ErrorCode::PaletteError, "sidebar piece " + std::to_string(i) + " has no recognisable shape");
    props[i] = {colors[i], static_cast<double>(a) / k2, sc, PropSource::Sidebar};
  }
  if (found < kPieceCount) {
    fail(ErrorCode::PaletteError, "found " + std::to_string(found) + " of 7 piece colours in the sidebar");
  }
  return props;
}

/// Dark pixels of the board region.
inline RasterMask extract_target_silhouette(const Frame& first, const InstanceManifest& im, const TangramEvalParams& params = {})
{
  const TangramScene& s = im.tangram();
  if (first.width() != s.canvas_w || first.height() != s.canvas_h) fail(ErrorCode::ShapeMismatch, "first frame does not match the canvas");
  const PixelRect region = board_region(s.variant);
  RasterMask m(first.width(), first.height());
  for (int y = region.y0; y < region.y1; ++y) {
    for (int x = region.x0; x < region.x1; ++x) {
      const ColorRGB c = first.at(x, y);
      if (std::max({c.r, c.g, c.b}) <= params.silhouette_max_channel) m.set(x, y);
    }
  }
  if (m.count() == 0) fail(ErrorCode::SilhouetteError, "no silhouette in the first frame");
  const double iou = mask_iou(m, s.silhouette);
  if (iou < params.silhouette_min_iou) {
    fail(ErrorCode::SilhouetteError, "first-frame silhouette IoU " + format_sig6(iou) + " against the manifest");
  }
  return m;
}

namespace detail {

/// Convex hull of the pixel centres of a mask (monotone chain, CCW).
inline Polygon mask_hull(const RasterMask& m)
{
  std::vector<Point2> pts;
  for (int y = 0; y < m.height(); ++y) {
    const auto* row = m.row(y);
    int first = -1, last = -1;
    for (int x = 0; x < m.width(); ++x) {
      if (!row[x]) continue;
      if (first < 0) first = x;
      last = x;
    }
    if (first < 0) continue;
    pts.push_back({first + 0.5, y + 0.5});
    if (last != first) pts.push_back({last + 0.5, y + 0.5});
  }
  std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  if (pts.size() < 3) return Polygon{pts};
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 1] - hull[k - 2], pts[i - 1] - hull[k - 2]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return Polygon{hull};
}

}  // namespace detail

/// Pieces are convex, so a visible region that is partly covered by another
/// piece has a hull reaching under its neighbour. Returns the pairs whose
/// hulls share more than `fraction` of the smaller piece's area.
inline std::vector<std::pair<int, int>> overlapping_pairs(const std::array<RasterMask, kPieceCount>& body, double fraction)
{
  std::array<RasterMask, kPieceCount> hulls;
  std::array<long, kPieceCount> area{};
  for (int i = 0; i < kPieceCount; ++i) {
    area[i] = body[i].count();
    const Polygon h = detail::mask_hull(body[i]);
    hulls[i] = h.size() >= 3 ? rasterize(h, body[i].width(), body[i].height()) : body[i];
    merge_into(hulls[i], body[i]);
  }
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < kPieceCount; ++i) {
    for (int j = i + 1; j < kPieceCount; ++j) {
      if (area[i] == 0 || area[j] == 0) continue;
      const long inter = intersection_count(hulls[i], hulls[j]);
      if (inter > fraction * static_cast<double>(std::min(area[i], area[j]))) out.emplace_back(i, j);
    }
  }
  return out;
}

inline std::array<PieceVerdict, kPieceCount> piece_completion(const std::array<RasterMask, kPieceCount>& body,
                                                              const PaletteProps& props, const RasterMask& silhouette,
                                                              const TangramEvalParams& params = {})
{
  const RasterMask grown = dilate(silhouette, params.inside_dilation);
  std::array<PieceVerdict, kPieceCount> out;
  for (int i = 0; i < kPieceCount; ++i) {
    PieceVerdict& v = out[i];
    v.piece_id = i;
    const long a = body[i].count();
    v.found = a > 0;
    if (!v.found) {
      v.failure_tags.emplace_back(tag::kChromatic);
      continue;
    }
    v.area_ratio = static_cast<double>(a) / props[i].a0;
    v.shape_ok = classify_component(body[i], params.shape_rules) == props[i].s0;
    const long in = intersection_count(body[i], grown);
    v.inside_ok = static_cast<double>(in) >= params.inside_fraction * static_cast<double>(a);
    const bool area_ok = v.area_ratio >= params.area_lo && v.area_ratio <= params.area_hi;
    v.u = area_ok && v.shape_ok && v.inside_ok ? 1 : 0;
    if (!area_ok || !v.shape_ok) v.failure_tags.emplace_back(tag::kStructural);
    if (!v.inside_ok) {
      // A piece whose centre is off the target is misplaced; one whose centre
      // is on the target but spills over is misoriented.
      const Point2 c = label_components(body[i]).components.front().centroid;
      const bool centre_in = grown.get(static_cast<int>(std::floor(c.x)), static_cast<int>(std::floor(c.y)));
      v.failure_tags.emplace_back(centre_in ? tag::kAngular : tag::kCentroid);
    }
  }
  return out;
}

/// Forces both pieces of every overlapping pair to u = 0.
inline void apply_overlaps(std::array<PieceVerdict, kPieceCount>& verdicts, const std::vector<std::pair<int, int>>& pairs)
{
  for (const auto& [i, j] : pairs) {
    for (int k : {i, j}) {
      verdicts[k].overlap = true;
      verdicts[k].u = 0;
      if (std::find(verdicts[k].failure_tags.begin(), verdicts[k].failure_tags.end(), tag::kStructural) ==
          verdicts[k].failure_tags.end()) {
        verdicts[k].failure_tags.emplace_back(tag::kStructural);
      }
    }
  }
}

struct GoalCompletion {
  double strict = 0.0;
  double progress = 0.0;
};

inline GoalCompletion strict_and_progress(const std::array<PieceVerdict, kPieceCount>& verdicts)
{
  int sum = 0;
  for (const auto& v : verdicts) sum += v.u;
  return {sum == kPieceCount ? 1.0 : 0.0, static_cast<double>(sum) / kPieceCount};
}

inline double boundary_iou(const std::array<RasterMask, kPieceCount>& masks, const RasterMask& silhouette)
{
  RasterMask u(silhouette.width(), silhouette.height());
  for (const auto& m : masks) merge_into(u, m);
  return mask_iou(u, silhouette);
}

/// Indices of k frames spread evenly over n, always including both ends.
inline std::vector<int> sample_frames(int n, int k)
{
  if (k < 2) fail(ErrorCode::UsageError, "k_samples must be at least 2");
  std::vector<int> out;
  for (int j = 0; j < k; ++j) out.push_back(static_cast<int>(std::lround(static_cast<double>(j) * (n - 1) / (k - 1))));
  return out;
}

using IntegrityFlags = std::vector<std::array<int, kPieceCount>>;

/// Integrity flag of every piece at each sampled frame: whether its visible
/// area, sidebar pixels rescaled to board size, lies in the area window.
inline IntegrityFlags integrity_flags(const FrameSequence& frames, const PaletteProps& props, double sidebar_scale,
                                      TangramVariant variant, const TangramEvalParams& params = {})
{
  validate_sequence(frames);
  const auto colors = palette_colors(props);
  const double k2 = sidebar_scale * sidebar_scale;
  IntegrityFlags out;
  for (int f : sample_frames(static_cast<int>(frames.size()), params.k_samples)) {
    const Frame& fr = frames[f];
    const auto idx = assign_palette(fr, colors, params.delta_col);
    std::array<double, kPieceCount> area{};
    for (int y = 0; y < fr.height(); ++y) {
      for (int x = 0; x < fr.width(); ++x) {
        const int k = idx[static_cast<std::size_t>(y) * fr.width() + x];
        if (k < 0) continue;
        const bool sidebar = variant != TangramVariant::FadeIn && x < kTangramSide;
        area[k] += sidebar ? 1.0 / k2 : 1.0;
      }
    }
    std::array<int, kPieceCount> flags{};
    for (int i = 0; i < kPieceCount; ++i) {
      const double r = area[i] / props[i].a0;
      flags[i] = r >= params.area_lo && r <= params.area_hi ? 1 : 0;
    }
    out.push_back(flags);
  }
  return out;
}

/// Fraction of (piece, sample) flags equal to the reference; an empty
/// reference stands for the ideal all-present sequence.
inline double visual_consistency(const IntegrityFlags& candidate, const IntegrityFlags& reference)
{
  if (candidate.empty()) return 0.0;
  if (!reference.empty() && reference.size() != candidate.size()) fail(ErrorCode::ShapeMismatch, "flag sequences differ in length");
  long agree = 0, total = 0;
  for (std::size_t t = 0; t < candidate.size(); ++t) {
    for (int i = 0; i < kPieceCount; ++i) {
      const int ref = reference.empty() ? 1 : reference[t][i];
      agree += candidate[t][i] == ref;
      ++total;
    }
  }
  return static_cast<double>(agree) / static_cast<double>(total);
}

/// Pearson correlation; undefined for fewer than three points or a constant series.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y)
{
  if (x.size() != y.size()) fail(ErrorCode::ShapeMismatch, "series differ in length");
  if (x.size() < 3) fail(ErrorCode::CorrelationUndefined, "need at least three points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) fail(ErrorCode::CorrelationUndefined, "constant series");
  return sxy / std::sqrt(sxx * syy);
}

/// Correlation between visual consistency and strict success over tangram reports.
inline double consistency_success_correlation(const std::vector<EvalReport>& reports)
{
  std::vector<double> vc, ok;
  for (const auto& r : reports) {
    if (r.task != Task::Tangram || !r.error.empty()) continue;
    if (!r.metrics.count("visual_consistency") || !r.metrics.count("strict_gc")) continue;
    vc.push_back(r.metrics.at("visual_consistency"));
    ok.push_back(r.metrics.at("strict_gc") == 1.0 ? 1.0 : 0.0);
  }
  return pearson(vc, ok);
}

inline nlohmann::json verdicts_to_json(const std::array<PieceVerdict, kPieceCount>& verdicts)
{
  nlohmann::json a = nlohmann::json::array();
  for (const auto& v : verdicts) {
    a.push_back({{"piece_id", v.piece_id},
                 {"found", v.found},
                 {"area_ratio", round_sig6(v.area_ratio)},
                 {"shape_ok", v.shape_ok},
                 {"inside_ok", v.inside_ok},
                 {"overlap", v.overlap},
                 {"u", v.u},
                 {"failure_tags", v.failure_tags}});
  }
  return a;
}

/// Scores a candidate assembly video. In reference mode the integrity flags
/// are compared with those of `golden`, synthesised from the manifest when absent.
inline EvalReport evaluate_tangram(const InstanceManifest& im, const FrameSequence& frames, const TangramEvalParams& params = {},
                                   const FrameSequence* golden = nullptr)
{
  const TangramScene& s = im.tangram();
  EvalReport r;
  r.instance_id = im.instance_id;
  r.task = Task::Tangram;
  r.variant = std::string(to_string(s.variant));
  r.splits = im.splits;
  validate_sequence(frames);
  if (frames.front().width() != s.canvas_w || frames.front().height() != s.canvas_h) {
    fail(ErrorCode::ShapeMismatch, "candidate frames are " + std::to_string(frames.front().width()) + "x" +
                                       std::to_string(frames.front().height()) + ", manifest canvas is " +
                                       std::to_string(s.canvas_w) + "x" + std::to_string(s.canvas_h));
  }
  const PaletteProps props = extract_palette_props(frames.front(), im, params);
  const RasterMask silhouette = extract_target_silhouette(frames.front(), im, params);

  const PieceMasks fin = segment_pieces(frames.back(), props, params);
  auto verdicts = piece_completion(fin.body, props, silhouette, params);
  apply_overlaps(verdicts, overlapping_pairs(fin.body, params.overlap_fraction));
  const GoalCompletion gc = strict_and_progress(verdicts);

  // Every pixel of a palette colour counts for the boundary, debris included.
  std::array<RasterMask, kPieceCount> all;
  const auto idx = assign_palette(frames.back(), palette_colors(props), params.delta_col);
  for (int k = 0; k < kPieceCount; ++k) {
    all[k] = RasterMask(s.canvas_w, s.canvas_h);
    auto& bits = all[k].bits();
    for (std::size_t p = 0; p < bits.size(); ++p) bits[p] = idx[p] == k;
  }
  const double biou = boundary_iou(all, silhouette);

  const IntegrityFlags flags = integrity_flags(frames, props, s.sidebar_scale, s.variant, params);
  IntegrityFlags ref;
  if (params.vc_mode == ConsistencyMode::Reference) {
    const FrameSequence synth = golden ? FrameSequence{} : synthesize_assembly_video(s);
    const FrameSequence& g = golden ? *golden : synth;
    ref = integrity_flags(g, extract_palette_props(g.front(), im, params), s.sidebar_scale, s.variant, params);
  }
  const double vc = visual_consistency(flags, ref);

  r.metrics = {{"strict_gc", gc.strict}, {"progress_gc", gc.progress}, {"boundary_iou", biou}, {"visual_consistency", vc}};
  for (const auto& v : verdicts) {
    for (const auto& t : v.failure_tags) r.add_tag(t);
  }
  long debris = 0;
  for (long d : fin.debris) debris += d;
  nlohmann::json a0 = nlohmann::json::array();
  for (const auto& p : props) a0.push_back(round_sig6(p.a0));
  r.diagnostics["pieces"] = verdicts_to_json(verdicts);
  r.diagnostics["reference_areas"] = a0;
  r.diagnostics["prop_source"] = to_string(props[0].source);
  r.diagnostics["debris_px"] = debris;
  r.diagnostics["vc_mode"] = to_string(params.vc_mode);
  r.diagnostics["sampled_frames"] = sample_frames(static_cast<int>(frames.size()), params.k_samples);
  return r;
}

}  // namespace fpb
