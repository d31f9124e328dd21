#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fpb/error.hpp"
#include "fpb/geom.hpp"
#include "fpb/icons.hpp"
#include "fpb/image.hpp"
#include "fpb/manifest.hpp"
#include "fpb/maze.hpp"
#include "fpb/prompt_text.hpp"
#include "fpb/rng.hpp"
#include "fpb/schedule.hpp"

namespace fpb {

inline constexpr ColorRGB kWhite{255, 255, 255};
inline constexpr ColorRGB kBlack{0, 0, 0};
inline constexpr ColorRGB kGoalRed{255, 0, 0};

constexpr int kMazeMargin = 16;
constexpr double kSpriteFraction = 0.6;
constexpr double kGoalRadiusFraction = 0.3;

/// Pixel layout of a maze board centred in its canvas. Cell (r, c) spans
/// [x0 + c*cell, x0 + (c+1)*cell) horizontally; walls are centred on grid lines.
struct BoardGeometry {
  int rows = 0;
  int cols = 0;
  int cell = 0;
  int wall = 0;
  int x0 = 0;
  int y0 = 0;

  /// Continuous cell coordinates (row, col) where integer values are cell
  /// centres, mapped to canvas pixels.
  Point2 to_pixel(double row, double col) const noexcept
  {
    return {x0 + (col + 0.5) * cell, y0 + (row + 0.5) * cell};
  }
  Point2 cell_centre(Cell c) const noexcept { return to_pixel(c.r, c.c); }
  /// Inverse of to_pixel.
  Point2 to_cell_coords(Point2 px) const noexcept { return {(px.y - y0) / cell - 0.5, (px.x - x0) / cell - 0.5}; }
  int width() const noexcept { return cols * cell; }
  int height() const noexcept { return rows * cell; }
};

inline BoardGeometry board_geometry(int rows, int cols, int canvas_w, int canvas_h)
{
  BoardGeometry g;
  g.rows = rows;
  g.cols = cols;
  g.cell = std::min((canvas_w - 2 * kMazeMargin) / cols, (canvas_h - 2 * kMazeMargin) / rows);
  if (g.cell < 8) fail(ErrorCode::InvalidMaze, "canvas too small for the maze");
  g.wall = std::max(2, static_cast<int>(std::lround(0.1 * g.cell)));
  g.x0 = (canvas_w - g.width()) / 2;
  g.y0 = (canvas_h - g.height()) / 2;
  return g;
}

inline BoardGeometry board_geometry(const MazeBody& b) { return board_geometry(b.spec.rows, b.spec.cols, b.canvas_w, b.canvas_h); }

inline Polygon circle_polygon(Point2 centre, double radius, int n = 48)
{
  Polygon p;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    p.vertices.push_back({centre.x + radius * std::cos(a), centre.y + radius * std::sin(a)});
  }
  return p;
}

/// Board without the agent: white corridors, black walls and outer border,
/// red goal disc, white canvas around the board.
inline Frame render_maze_background(const MazeSpec& m, int canvas_w, int canvas_h)
{
  const BoardGeometry g = board_geometry(m.rows, m.cols, canvas_w, canvas_h);
  Frame img(canvas_w, canvas_h, kWhite);
  const int lo = g.wall / 2, hi = g.wall - lo;
  auto hline = [&](int row_line, int c0, int c1) {
    const int y = g.y0 + row_line * g.cell;
    img.fill_rect(g.x0 + c0 * g.cell - lo, y - lo, g.x0 + c1 * g.cell + hi, y + hi, kBlack);
  };
  auto vline = [&](int col_line, int r0, int r1) {
    const int x = g.x0 + col_line * g.cell;
    img.fill_rect(x - lo, g.y0 + r0 * g.cell - lo, x + hi, g.y0 + r1 * g.cell + hi, kBlack);
  };
  hline(0, 0, m.cols);
  hline(m.rows, 0, m.cols);
  vline(0, 0, m.rows);
  vline(m.cols, 0, m.rows);
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) {
      if (c + 1 < m.cols && m.blocked({r, c}, {r, c + 1})) vline(c + 1, r, r + 1);
      if (r + 1 < m.rows && m.blocked({r, c}, {r + 1, c})) hline(r + 1, c, c + 1);
    }
  }
  img.fill_polygon(circle_polygon(g.cell_centre(m.goal), kGoalRadiusFraction * g.cell), kGoalRed);
  return img;
}

/// Draws the icon sprite centred at continuous cell coordinates (row, col).
inline void draw_agent(Frame& img, const BoardGeometry& g, const IconSpec& icon, Point2 rc)
{
  const Point2 centre = g.to_pixel(rc.x, rc.y);
  const double size = kSpriteFraction * g.cell;
  for (const auto& layer : icon_sprite(icon)) {
    Polygon p = layer.poly;
    for (auto& v : p.vertices) v = centre + v * size;
    img.fill_polygon(p, layer.color);
  }
}

/// Full frame with the agent at continuous cell coordinates `agent` = (row, col).
inline Frame render_maze_frame(const MazeSpec& m, Point2 agent, int canvas_w = kMazeCanvasW, int canvas_h = kMazeCanvasH)
{
  if (agent.x < -0.5 || agent.y < -0.5 || agent.x > m.rows - 0.5 || agent.y > m.cols - 0.5) {
    fail(ErrorCode::InvalidMaze, "agent position outside the grid");
  }
  Frame img = render_maze_background(m, canvas_w, canvas_h);
  draw_agent(img, board_geometry(m.rows, m.cols, canvas_w, canvas_h), icon_spec(m.icon_id), agent);
  return img;
}

inline Frame build_background(const InstanceManifest& im)
{
  const MazeBody& b = im.maze();
  return render_maze_background(b.spec, b.canvas_w, b.canvas_h);
}

inline Frame initial_frame(const InstanceManifest& im)
{
  const MazeBody& b = im.maze();
  return render_maze_frame(b.spec, {static_cast<double>(b.spec.start.r), static_cast<double>(b.spec.start.c)},
                           b.canvas_w, b.canvas_h);
}

/// Position along a cell path at progress p (in steps), linear between centres.
inline Point2 path_position(const std::vector<Cell>& cells, double p)
{
  const int steps = static_cast<int>(cells.size()) - 1;
  if (steps <= 0 || p <= 0.0) return {static_cast<double>(cells.front().r), static_cast<double>(cells.front().c)};
  if (p >= steps) return {static_cast<double>(cells.back().r), static_cast<double>(cells.back().c)};
  const int i = static_cast<int>(std::floor(p));
  const double f = p - i;
  const Cell a = cells[i], b = cells[i + 1];
  return {a.r + (b.r - a.r) * f, a.c + (b.c - a.c) * f};
}

/// Renders the agent walking `cells` with the given resolved schedule. The
/// cell list need not be legal, which lets perturbations reuse this path.
inline FrameSequence render_cell_path(const MazeBody& b, const std::vector<Cell>& cells, const FrameSchedule& resolved,
                                      int steps_for_timing)
{
  const Frame bg = render_maze_background(b.spec, b.canvas_w, b.canvas_h);
  const BoardGeometry g = board_geometry(b);
  const IconSpec icon = icon_spec(b.spec.icon_id);
  FrameSequence out;
  out.reserve(static_cast<std::size_t>(resolved.total_frames));
  for (int f = 0; f < resolved.total_frames; ++f) {
    Frame img = bg;
    draw_agent(img, g, icon, path_position(cells, schedule_progress(resolved, steps_for_timing, f)));
    out.push_back(std::move(img));
  }
  return out;
}

inline FrameSequence synthesize_solution_video(const InstanceManifest& im, const FrameSchedule& schedule)
{
  const MazeBody& b = im.maze();
  const int steps = static_cast<int>(b.actions.size());
  const FrameSchedule s = resolve_schedule(schedule, steps);
  return render_cell_path(b, replay(b.spec, b.spec.start, b.actions), s, steps);
}

inline FrameSequence synthesize_solution_video(const InstanceManifest& im) { return synthesize_solution_video(im, im.schedule); }

// ---------------------------------------------------------------------------
// Instance sampling

struct PathRange {
  int lo = 2;
  int hi = 12;
};

constexpr int kMaxRejections = 10000;

/// Icon assigned to a layout: a hash of the wall set picks from the pool, so a
/// given layout keeps its icon across runs.
inline int icon_for_layout(const MazeSpec& m, IconSplit pool, std::uint64_t salt = 0)
{
  std::uint64_t h = mix64(static_cast<std::uint64_t>(m.rows) * 131 + m.cols) ^ salt;
  for (auto w : m.wall_east) h = mix64(h ^ w);
  for (auto w : m.wall_south) h = mix64(h ^ (w + 2));
  const auto ids = icon_pool(pool);
  return ids[h % ids.size()];
}

inline std::vector<std::string> maze_splits(const MazeSpec& m, int steps)
{
  std::vector<std::string> s{std::string(maze_tier_tag(std::max(m.rows, m.cols), steps))};
  if (icon_spec(m.icon_id).split == IconSplit::Unseen) s.emplace_back(split::kUnseenIcon);
  std::sort(s.begin(), s.end());
  return s;
}

inline InstanceManifest make_maze_manifest(std::string instance_id, std::uint64_t seed, MazeSpec spec, std::string partition)
{
  InstanceManifest im;
  im.task = Task::Maze;
  im.instance_id = std::move(instance_id);
  im.seed = seed;
  im.partition = std::move(partition);
  MazeBody body;
  body.actions = solve_shortest_path(spec);
  body.spec = std::move(spec);
  im.splits = maze_splits(body.spec, static_cast<int>(body.actions.size()));
  im.body = std::move(body);
  im.schedule = resolve_schedule(default_schedule(), static_cast<int>(im.maze().actions.size()));
  im.prompt_text = std::string(prompts::maze);
  return im;
}

/// Rejection-samples a maze and a start/goal pair whose shortest path length
/// lies in `range`.
inline InstanceManifest sample_instance(int rows, int cols, PathRange range, IconSplit icon_pool_split, std::uint64_t seed,
                                        std::string instance_id = {})
{
  if (rows < 3 || cols < 3 || rows > 12 || cols > 12) fail(ErrorCode::InvalidMaze, "grid size outside [3,12]");
  if (range.lo < 1 || range.hi < range.lo) fail(ErrorCode::InfeasibleRange, "empty path length range");
  // A path visits distinct cells, so it has at most rows*cols - 1 steps.
  if (range.lo > rows * cols - 1) {
    fail(ErrorCode::InfeasibleRange, "path length " + std::to_string(range.lo) + " impossible on " + std::to_string(rows) +
                                         "x" + std::to_string(cols));
  }
  Rng rng(derive_seed(seed, "instance"));
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    MazeSpec m = generate_maze(rows, cols, derive_seed(seed, "maze", static_cast<std::uint64_t>(attempt)));
    const int n = rows * cols;
    const Cell start = m.cell_at(static_cast<int>(rng.below(static_cast<std::uint64_t>(n))));
    const Cell goal = m.cell_at(static_cast<int>(rng.below(static_cast<std::uint64_t>(n))));
    if (start == goal) continue;
    const int d = bfs_distances(m, start)[m.index(goal)];
    if (d < range.lo || d > range.hi) continue;
    m.start = start;
    m.goal = goal;
    m.icon_id = icon_for_layout(m, icon_pool_split);
    if (instance_id.empty()) instance_id = "maze_" + std::to_string(rows) + "x" + std::to_string(cols) + "_" + std::to_string(seed);
    return make_maze_manifest(std::move(instance_id), seed, std::move(m), "test");
  }
  fail(ErrorCode::InfeasibleRange, "no instance with path length in [" + std::to_string(range.lo) + "," +
                                       std::to_string(range.hi) + "] after " + std::to_string(kMaxRejections) + " tries on " +
                                       std::to_string(rows) + "x" + std::to_string(cols));
}

}  // namespace fpb
