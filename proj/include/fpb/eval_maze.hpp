#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "fpb/error.hpp"
#include "fpb/geom.hpp"
#include "fpb/image.hpp"
#include "fpb/manifest.hpp"
#include "fpb/maze.hpp"
#include "fpb/maze_gen.hpp"
#include "fpb/raster.hpp"
#include "fpb/report.hpp"

namespace fpb {

struct MazeEvalParams {
  int tau = 30;                     // max-channel difference counted as motion
  int min_area = 25;                // px
  double continuity_radius = 1.5;   // cell widths
  int resample_per_step = 20;
  double hysteresis = 0.15;         // cell widths
  bool median_background = false;   // estimate the background instead of rendering it
};

struct TraceSample {
  int frame = 0;
  Point2 centroid;
  long area = 0;
};

struct TrajectoryTrace {
  std::vector<TraceSample> samples;
  std::vector<int> gaps;
  int frames_examined = 0;
  std::optional<int> violation_frame;  // first frame whose blobs all broke continuity

  std::vector<Point2> centroids() const
  {
    std::vector<Point2> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.centroid);
    return out;
  }
};

/// Pixels whose max channel difference from the background exceeds tau.
inline RasterMask motion_mask(const Frame& frame, const Frame& background, int tau)
{
  if (frame.width() != background.width() || frame.height() != background.height()) {
    fail(ErrorCode::ShapeMismatch, "frame and background differ in size");
  }
  RasterMask m(frame.width(), frame.height());
  const auto& a = frame.data();
  const auto& b = background.data();
  auto& bits = m.bits();
  for (std::size_t i = 0, p = 0; p < bits.size(); ++p, i += 3) {
    const int d = std::max({std::abs(a[i] - b[i]), std::abs(a[i + 1] - b[i + 1]), std::abs(a[i + 2] - b[i + 2])});
    bits[p] = d > tau ? 1 : 0;
  }
  return m;
}

/// Tracks the agent by background subtraction. `start` is the expected first
/// position and `cell_px` the cell width used for the continuity radius. A
/// frame whose blobs all lie beyond the radius ends the trace.
inline TrajectoryTrace extract_agent_trajectory(const FrameSequence& frames, const Frame& background, Point2 start,
                                                double cell_px, const MazeEvalParams& params = {})
{
  validate_sequence(frames);
  TrajectoryTrace trace;
  const double radius = params.continuity_radius * cell_px;
  Point2 ref = start;
  for (int f = 0; f < static_cast<int>(frames.size()); ++f) {
    const Labelling lab = label_components(motion_mask(frames[f], background, params.tau));
    ++trace.frames_examined;
    const ComponentStats* best = nullptr;
    double best_d = 0.0;
    bool any = false;
    for (const auto& c : lab.components) {
      if (c.area < params.min_area) continue;
      any = true;
      const double d = distance(c.centroid, ref);
      if (d <= radius && (!best || d < best_d)) {
        best = &c;
        best_d = d;
      }
    }
    if (best) {
      trace.samples.push_back({f, best->centroid, best->area});
      ref = best->centroid;
    } else if (any) {
      trace.violation_frame = f;
      break;
    } else {
      trace.gaps.push_back(f);
    }
  }
  if (2 * static_cast<int>(trace.gaps.size()) > trace.frames_examined) {
    fail(ErrorCode::TrackingFailure, std::to_string(trace.gaps.size()) + " of " + std::to_string(trace.frames_examined) +
                                         " frames without a detectable agent");
  }
  if (trace.samples.empty()) fail(ErrorCode::TrackingFailure, "agent never detected");
  return trace;
}

/// m points equally spaced in cumulative arc length along the polyline.
inline std::vector<Point2> resample_by_arclength(const std::vector<Point2>& pts, int m)
{
  if (pts.empty()) fail(ErrorCode::EmptySequence, "cannot resample an empty trace");
  if (m < 2) fail(ErrorCode::UsageError, "resample count must be at least 2");
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) cum[i] = cum[i - 1] + distance(pts[i - 1], pts[i]);
  const double total = cum.back();
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(m));
  if (total <= 0.0) {
    out.assign(static_cast<std::size_t>(m), pts.front());
    return out;
  }
  std::size_t seg = 1;
  for (int i = 0; i < m; ++i) {
    const double s = total * i / (m - 1);
    if (i == m - 1) {
      out.push_back(pts.back());
      break;
    }
    while (seg + 1 < pts.size() && cum[seg] < s) ++seg;
    const double len = cum[seg] - cum[seg - 1];
    const double t = len > 0.0 ? (s - cum[seg - 1]) / len : 0.0;
    out.push_back(pts[seg - 1] + (pts[seg] - pts[seg - 1]) * t);
  }
  return out;
}

inline std::vector<Point2> resample_by_arclength(const TrajectoryTrace& trace, int m)
{
  return resample_by_arclength(trace.centroids(), m);
}

struct CellSequence {
  std::vector<Cell> cells;
  int off_board_points = 0;  // points more than the hysteresis band outside the board
};

/// Maps canvas points to grid cells, collapsing repeats. A point that is past
/// the previous cell's edge by no more than `hysteresis` cell widths keeps the
/// previous cell.
inline CellSequence trace_to_cells(const std::vector<Point2>& polyline, const BoardGeometry& g, double hysteresis = 0.15)
{
  CellSequence out;
  for (const Point2& px : polyline) {
    const Point2 rc = g.to_cell_coords(px);
    const double lim_r = g.rows - 0.5 + hysteresis, lim_c = g.cols - 0.5 + hysteresis;
    if (rc.x < -0.5 - hysteresis || rc.y < -0.5 - hysteresis || rc.x > lim_r || rc.y > lim_c) ++out.off_board_points;
    Cell raw{std::clamp(static_cast<int>(std::floor(rc.x + 0.5)), 0, g.rows - 1),
             std::clamp(static_cast<int>(std::floor(rc.y + 0.5)), 0, g.cols - 1)};
    if (!out.cells.empty()) {
      const Cell prev = out.cells.back();
      if (std::abs(rc.x - prev.r) <= 0.5 + hysteresis && std::abs(rc.y - prev.c) <= 0.5 + hysteresis) raw = prev;
    }
    if (out.cells.empty() || out.cells.back() != raw) out.cells.push_back(raw);
  }
  return out;
}

struct MazeScore {
  bool em = false;
  double pr = 0.0;
  int matched = 0;  // k, the matched prefix length in steps
  std::vector<std::string> tags;
};

/// Longest correct, wall-legal prefix against the golden cell path.
inline MazeScore score_em_pr(const std::vector<Cell>& cells, const std::vector<Cell>& golden, const MazeSpec& spec)
{
  if (cells.empty()) fail(ErrorCode::EmptySequence, "empty cell sequence");
  if (golden.size() < 2) fail(ErrorCode::InvalidManifest, "golden path has no steps");
  MazeScore s;
  std::size_t first_illegal = cells.size();
  for (std::size_t i = 1; i < cells.size(); ++i) {
    const Cell a = cells[i - 1], b = cells[i];
    if (!adjacent(a, b)) {
      s.tags.emplace_back(tag::kKinematic);
    } else if (spec.blocked(a, b)) {
      s.tags.emplace_back(tag::kBoundaryViolation);
    } else {
      continue;
    }
    first_illegal = std::min(first_illegal, i);
  }
  std::sort(s.tags.begin(), s.tags.end());
  s.tags.erase(std::unique(s.tags.begin(), s.tags.end()), s.tags.end());
  const std::size_t n = std::min({cells.size(), golden.size(), first_illegal});
  int k = -1;
  for (std::size_t i = 0; i < n && cells[i] == golden[i]; ++i) k = static_cast<int>(i);
  const int steps = static_cast<int>(golden.size()) - 1;
  s.matched = std::max(k, 0);
  s.pr = static_cast<double>(s.matched) / steps;
  s.em = s.matched == steps && cells == golden;
  return s;
}

inline nlohmann::json cells_to_json(const std::vector<Cell>& cells)
{
  nlohmann::json a = nlohmann::json::array();
  for (const Cell& c : cells) a.push_back({c.r, c.c});
  return a;
}

/// Scores a candidate video against a maze manifest.
inline EvalReport evaluate_maze(const InstanceManifest& im, const FrameSequence& frames, const MazeEvalParams& params = {})
{
  const MazeBody& body = im.maze();
  EvalReport r;
  r.instance_id = im.instance_id;
  r.task = Task::Maze;
  r.splits = im.splits;
  validate_sequence(frames);
  if (frames.front().width() != body.canvas_w || frames.front().height() != body.canvas_h) {
    fail(ErrorCode::ShapeMismatch, "candidate frames are " + std::to_string(frames.front().width()) + "x" +
                                       std::to_string(frames.front().height()) + ", manifest canvas is " +
                                       std::to_string(body.canvas_w) + "x" + std::to_string(body.canvas_h));
  }
  const BoardGeometry g = board_geometry(body);
  const std::vector<Cell> golden = replay(body.spec, body.spec.start, body.actions);
  const Frame background = params.median_background ? median_background(frames) : build_background(im);
  r.diagnostics["background"] = params.median_background ? "median" : "rendered";
  r.diagnostics["golden_cells"] = cells_to_json(golden);

  TrajectoryTrace trace;
  try {
    trace = extract_agent_trajectory(frames, background, g.cell_centre(body.spec.start), g.cell, params);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TrackingFailure) throw;
    r.metrics = {{"em", 0.0}, {"pr", 0.0}};
    r.add_tag(tag::kTrackingFailure);
    r.diagnostics["tracking"] = e.what();
    return r;
  }
  const int steps = static_cast<int>(body.actions.size());
  const auto polyline = resample_by_arclength(trace, std::max(2, params.resample_per_step * steps));
  const CellSequence cs = trace_to_cells(polyline, g, params.hysteresis);
  const MazeScore score = score_em_pr(cs.cells, golden, body.spec);

  r.metrics = {{"em", score.em ? 1.0 : 0.0}, {"pr", score.pr}};
  if (trace.violation_frame) r.add_tag(tag::kKinematic);
  for (const auto& t : score.tags) r.add_tag(t);
  if (cs.off_board_points > 0) r.add_tag(tag::kBoundaryViolation);
  if (!score.em && r.failure_tags.empty()) r.add_tag(tag::kPathDeviation);

  nlohmann::json gaps = trace.gaps;
  r.diagnostics["trajectory"] = {{"samples", trace.samples.size()},
                                 {"gaps", gaps},
                                 {"frames_examined", trace.frames_examined},
                                 {"violation_frame", trace.violation_frame ? nlohmann::json(*trace.violation_frame) : nlohmann::json()},
                                 {"off_board_points", cs.off_board_points}};
  r.diagnostics["cells"] = cells_to_json(cs.cells);
  r.diagnostics["matched_steps"] = score.matched;
  return r;
}

}  // namespace fpb
