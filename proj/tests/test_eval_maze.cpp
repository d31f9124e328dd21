#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fpb/eval_maze.hpp"
#include "fpb/maze_gen.hpp"
#include "fpb/rng.hpp"

using namespace fpb;

namespace {

InstanceManifest instance(int size, PathRange range, std::uint64_t seed)
{
  return sample_instance(size, size, range, IconSplit::Seen, seed);
}

// Random monotone re-timing: starts at 0, ends at n-1, each step advances by 0..3.
std::vector<int> random_retiming(int n, Rng& rng)
{
  std::vector<int> idx{0};
  while (idx.back() < n - 1) {
    const int d = static_cast<int>(rng.below(4));
    idx.push_back(std::min(n - 1, idx.back() + d));
  }
  return idx;
}

FrameSequence apply_retiming(const FrameSequence& src, const std::vector<int>& idx)
{
  FrameSequence out;
  for (int i : idx) out.push_back(src[i]);
  return out;
}

// Oracle: the point at arc length s along the polyline, by direct walking.
Point2 walk(const std::vector<Point2>& pts, double s)
{
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double len = distance(pts[i - 1], pts[i]);
    if (s <= len) return len > 0 ? pts[i - 1] + (pts[i] - pts[i - 1]) * (s / len) : pts[i - 1];
    s -= len;
  }
  return pts.back();
}

}  // namespace

TEST(ResampleByArclength, UniformSpacingOnSegment)
{
  const auto out = resample_by_arclength(std::vector<Point2>{{0, 0}, {10, 0}}, 6);
  ASSERT_EQ(out.size(), 6u);
  for (int i = 0; i < 6; ++i) {
    EXPECT_NEAR(out[i].x, 2.0 * i, 1e-12);
    EXPECT_NEAR(out[i].y, 0.0, 1e-12);
  }
}

TEST(ResampleByArclength, MatchesWalkingOracle)
{
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Point2> pts;
    const int n = 2 + static_cast<int>(rng.below(10));
    for (int i = 0; i < n; ++i) pts.push_back({rng.uniform(0, 100), rng.uniform(0, 100)});
    double total = 0;
    for (int i = 1; i < n; ++i) total += distance(pts[i - 1], pts[i]);
    const int m = 2 + static_cast<int>(rng.below(40));
    const auto out = resample_by_arclength(pts, m);
    for (int i = 0; i < m; ++i) {
      const Point2 o = walk(pts, total * i / (m - 1));
      EXPECT_NEAR(out[i].x, o.x, 1e-9);
      EXPECT_NEAR(out[i].y, o.y, 1e-9);
    }
  }
}

TEST(ResampleByArclength, DuplicatedSamplesGiveSamePolyline)
{
  const std::vector<Point2> pts{{0, 0}, {5, 0}, {5, 7}, {12, 7}};
  std::vector<Point2> slow;
  for (const auto& p : pts) {
    slow.push_back(p);
    slow.push_back(p);
  }
  const auto a = resample_by_arclength(pts, 33);
  const auto b = resample_by_arclength(slow, 33);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i].x, b[i].x, 1e-12);
    EXPECT_NEAR(a[i].y, b[i].y, 1e-12);
  }
}

TEST(ResampleByArclength, ZeroLengthGivesCopies)
{
  const auto out = resample_by_arclength(std::vector<Point2>{{3, 4}, {3, 4}}, 5);
  ASSERT_EQ(out.size(), 5u);
  for (const auto& p : out) EXPECT_EQ(p, (Point2{3, 4}));
  EXPECT_THROW(resample_by_arclength(std::vector<Point2>{}, 5), Error);
}

TEST(TraceToCells, SinglePointAndHysteresis)
{
  const BoardGeometry g = board_geometry(4, 4, kMazeCanvasW, kMazeCanvasH);
  EXPECT_EQ(trace_to_cells({g.to_pixel(1, 2)}, g).cells.size(), 1u);

  // Oscillating +-0.1 cell around the boundary between (1,1) and (1,2).
  std::vector<Point2> pts{g.to_pixel(1, 1)};
  for (int i = 0; i < 20; ++i) pts.push_back(g.to_pixel(1, 1.5 + (i % 2 ? 0.1 : -0.1)));
  const auto cs = trace_to_cells(pts, g);
  ASSERT_EQ(cs.cells.size(), 1u);
  EXPECT_EQ(cs.cells[0], (Cell{1, 1}));
  EXPECT_EQ(cs.off_board_points, 0);

  pts.push_back(g.to_pixel(1, 2));
  EXPECT_EQ(trace_to_cells(pts, g).cells.back(), (Cell{1, 2}));

  const auto off = trace_to_cells({g.to_pixel(0, 0), g.to_pixel(-1.2, 0)}, g);
  EXPECT_EQ(off.cells.back(), (Cell{0, 0}));
  EXPECT_EQ(off.off_board_points, 1);
}

TEST(ScoreEmPr, Definitions)
{
  const InstanceManifest im = instance(6, {6, 6}, 11);
  const MazeSpec& m = im.maze().spec;
  const auto g = replay(m, m.start, im.maze().actions);
  ASSERT_EQ(g.size(), 7u);

  const MazeScore exact = score_em_pr(g, g, m);
  EXPECT_TRUE(exact.em);
  EXPECT_DOUBLE_EQ(exact.pr, 1.0);
  EXPECT_TRUE(exact.tags.empty());

  // Three correct steps, then a legal move off the golden path.
  std::vector<Cell> div(g.begin(), g.begin() + 4);
  for (const Cell n : m.open_neighbours(g[3])) {
    if (n != g[2] && n != g[4]) {
      div.push_back(n);
      break;
    }
  }
  const MazeScore d = score_em_pr(div, g, m);
  EXPECT_FALSE(d.em);
  EXPECT_DOUBLE_EQ(d.pr, 0.5);

  // Extra cells after the goal: PR = 1 but not EM.
  std::vector<Cell> extra = g;
  extra.push_back(g[5]);
  const MazeScore e = score_em_pr(extra, g, m);
  EXPECT_FALSE(e.em);
  EXPECT_DOUBLE_EQ(e.pr, 1.0);
}

TEST(ScoreEmPr, WallCrossingTruncates)
{
  // Find an 8-step instance whose third golden cell has a walled neighbour.
  for (std::uint64_t seed = 1; seed < 200; ++seed) {
    const InstanceManifest im = instance(7, {8, 8}, seed);
    const MazeSpec& m = im.maze().spec;
    const auto g = replay(m, m.start, im.maze().actions);
    for (Action a : {Action::Up, Action::Down, Action::Left, Action::Right}) {
      const Cell n = step(g[2], a);
      if (!m.in_bounds(n) || !m.blocked(g[2], n)) continue;
      std::vector<Cell> cells{g[0], g[1], g[2], n};
      const MazeScore s = score_em_pr(cells, g, m);
      EXPECT_FALSE(s.em);
      EXPECT_DOUBLE_EQ(s.pr, 0.25);
      ASSERT_EQ(s.tags.size(), 1u);
      EXPECT_EQ(s.tags[0], tag::kBoundaryViolation);
      return;
    }
  }
  FAIL() << "no suitable instance found";
}

TEST(EvaluateMaze, BackgroundDiffersFromFirstFrameOnlyInStartCell)
{
  const InstanceManifest im = instance(5, {4, 8}, 3);
  const Frame bg = build_background(im);
  const Frame v0 = initial_frame(im);
  const BoardGeometry g = board_geometry(im.maze());
  const Point2 c = g.cell_centre(im.maze().spec.start);
  long diff = 0;
  for (int y = 0; y < bg.height(); ++y) {
    for (int x = 0; x < bg.width(); ++x) {
      if (bg.at(x, y) == v0.at(x, y)) continue;
      ++diff;
      EXPECT_LE(std::abs(x + 0.5 - c.x), g.cell / 2.0);
      EXPECT_LE(std::abs(y + 0.5 - c.y), g.cell / 2.0);
    }
  }
  EXPECT_GT(diff, 0);
  InstanceManifest other = im;
  other.schedule = per_step_schedule(7, 2, 3);
  EXPECT_EQ(build_background(other), bg);
}

TEST(EvaluateMaze, GoldenRoundTripAcrossTiers)
{
  struct Tier {
    int size;
    PathRange range;
  };
  const std::vector<Tier> tiers{{3, {2, 8}}, {5, {3, 12}}, {7, {2, 12}}, {9, {13, 18}}, {12, {13, 18}}};
  std::uint64_t seed = 100;
  for (const auto& t : tiers) {
    const InstanceManifest im = instance(t.size, t.range, seed++);
    const auto frames = synthesize_solution_video(im);
    const EvalReport r = evaluate_maze(im, frames);
    EXPECT_EQ(r.metrics.at("em"), 1.0) << im.instance_id;
    EXPECT_EQ(r.metrics.at("pr"), 1.0) << im.instance_id;
    EXPECT_TRUE(r.failure_tags.empty()) << im.instance_id;
    EXPECT_EQ(r.diagnostics["cells"], r.diagnostics["golden_cells"]);
    EXPECT_TRUE(r.diagnostics["trajectory"]["gaps"].empty());
  }
}

TEST(EvaluateMaze, RoundTripForPerStepSchedules)
{
  const InstanceManifest im = instance(6, {5, 9}, 21);
  for (int kappa : {3, 4, 7, 11}) {
    const auto frames = synthesize_solution_video(im, per_step_schedule(kappa, 2, 5));
    const EvalReport r = evaluate_maze(im, frames);
    EXPECT_EQ(r.metrics.at("em"), 1.0) << kappa;
    EXPECT_EQ(r.metrics.at("pr"), 1.0) << kappa;
  }
}

TEST(EvaluateMaze, MedianBackgroundRoundTrip)
{
  const InstanceManifest im = instance(5, {6, 10}, 31);
  MazeEvalParams p;
  p.median_background = true;
  const EvalReport r = evaluate_maze(im, synthesize_solution_video(im), p);
  EXPECT_EQ(r.metrics.at("em"), 1.0);
  EXPECT_EQ(r.diagnostics["background"], "median");
}

TEST(EvaluateMaze, RetimingInvariance)
{
  Rng rng(99);
  for (int i = 0; i < 6; ++i) {
    const InstanceManifest im = instance(4 + i, {4, 14}, 500 + i);
    const auto golden = synthesize_solution_video(im);
    const EvalReport base = evaluate_maze(im, golden);
    for (int trial = 0; trial < 3; ++trial) {
      const auto idx = random_retiming(static_cast<int>(golden.size()), rng);
      const EvalReport r = evaluate_maze(im, apply_retiming(golden, idx));
      EXPECT_EQ(r.metrics, base.metrics);
      EXPECT_EQ(r.diagnostics["cells"], base.diagnostics["cells"]);
    }
  }
}

TEST(EvaluateMaze, RetimedPolylineStaysWithinHalfPixel)
{
  // Frames may be dropped only where the agent moves straight, so the
  // centroid polyline keeps every corner.
  const InstanceManifest im = instance(6, {8, 12}, 77);
  const MazeBody& b = im.maze();
  const auto golden = synthesize_solution_video(im);
  const auto cells = replay(b.spec, b.spec.start, b.actions);
  const int steps = static_cast<int>(b.actions.size());
  const BoardGeometry g = board_geometry(b);
  const Frame bg = build_background(im);
  const Point2 start = g.cell_centre(b.spec.start);
  const auto ref = resample_by_arclength(extract_agent_trajectory(golden, bg, start, g.cell), 20 * steps);

  auto pos = [&](int f) { return path_position(cells, schedule_progress(im.schedule, steps, f)); };
  auto straight = [&](int f) {
    const Point2 a = pos(f - 1), m = pos(f), c = pos(f + 1);
    return std::abs(cross(m - a, c - m)) < 1e-12 && dot(m - a, c - m) > 0;
  };
  Rng rng(5);
  const int n = static_cast<int>(golden.size());
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<int> idx;
    for (int f = 0; f < n; ++f) {
      const bool droppable = f > 0 && f + 1 < n && straight(f) && (idx.empty() || idx.back() == f - 1);
      if (droppable && rng.below(3) == 0) continue;
      idx.push_back(f);
      if (rng.below(4) == 0) idx.push_back(f);
    }
    const auto got =
        resample_by_arclength(extract_agent_trajectory(apply_retiming(golden, idx), bg, start, g.cell), 20 * steps);
    double worst = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, distance(ref[i], got[i]));
    EXPECT_LE(worst, 0.5) << "trial " << trial;
  }
}

TEST(EvaluateMaze, TeleportTruncatesTrace)
{
  const InstanceManifest im = instance(8, {10, 12}, 41);
  const MazeBody& b = im.maze();
  auto frames = synthesize_solution_video(im);
  const auto cells = replay(b.spec, b.spec.start, b.actions);
  const int mid = static_cast<int>(frames.size()) / 2;
  const int steps = static_cast<int>(b.actions.size());
  const Point2 here = path_position(cells, schedule_progress(im.schedule, steps, mid));
  // Jump three cells along whichever axis stays on the board.
  Point2 there = here;
  there.y = here.y + 3 <= b.spec.cols - 1 ? here.y + 3 : here.y - 3;
  for (int f = mid; f < static_cast<int>(frames.size()); ++f) frames[f] = render_maze_frame(b.spec, there);
  const EvalReport r = evaluate_maze(im, frames);
  EXPECT_EQ(r.metrics.at("em"), 0.0);
  EXPECT_LE(r.metrics.at("pr"), 0.5 + 1.0 / steps + 1e-12);
  EXPECT_NE(std::find(r.failure_tags.begin(), r.failure_tags.end(), tag::kKinematic), r.failure_tags.end());
  EXPECT_EQ(r.diagnostics["trajectory"]["violation_frame"], mid);
}

TEST(EvaluateMaze, StaticAgentGivesSingleCell)
{
  const InstanceManifest im = instance(5, {4, 8}, 51);
  const FrameSequence frames(40, initial_frame(im));
  const EvalReport r = evaluate_maze(im, frames);
  EXPECT_EQ(r.diagnostics["cells"].size(), 1u);
  EXPECT_EQ(r.metrics.at("pr"), 0.0);
  EXPECT_EQ(r.metrics.at("em"), 0.0);
  EXPECT_EQ(r.failure_tags, std::vector<std::string>{std::string(tag::kPathDeviation)});
}

TEST(EvaluateMaze, MissingAgentIsTrackingFailure)
{
  const InstanceManifest im = instance(5, {4, 8}, 61);
  const FrameSequence frames(20, build_background(im));
  const EvalReport r = evaluate_maze(im, frames);
  EXPECT_EQ(r.metrics.at("em"), 0.0);
  EXPECT_EQ(r.metrics.at("pr"), 0.0);
  EXPECT_EQ(r.failure_tags.front(), tag::kTrackingFailure);
}

TEST(EvaluateMaze, WrongCanvasIsShapeMismatch)
{
  const InstanceManifest im = instance(5, {4, 8}, 61);
  try {
    evaluate_maze(im, FrameSequence(3, Frame(100, 100)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(EvaluateMaze, IconInvariance)
{
  const InstanceManifest im = instance(6, {6, 10}, 71);
  nlohmann::json cells;
  for (int id = 0; id < 50; id += 3) {
    InstanceManifest other = im;
    std::get<MazeBody>(other.body).spec.icon_id = id;
    const EvalReport r = evaluate_maze(other, synthesize_solution_video(other));
    EXPECT_EQ(r.metrics.at("em"), 1.0) << id;
    if (cells.is_null()) cells = r.diagnostics["cells"];
    EXPECT_EQ(r.diagnostics["cells"], cells) << id;
  }
}

TEST(EvaluateMaze, TruncationNeverIncreasesPr)
{
  const InstanceManifest im = instance(7, {9, 12}, 81);
  const auto golden = synthesize_solution_video(im);
  double last = 2.0;
  for (int len = static_cast<int>(golden.size()); len >= 1; len -= 4) {
    const FrameSequence cut(golden.begin(), golden.begin() + len);
    const double pr = evaluate_maze(im, cut).metrics.at("pr");
    EXPECT_LE(pr, last) << len;
    last = pr;
  }
}

TEST(EvaluateMaze, TaskMismatch)
{
  InstanceManifest im = instance(5, {4, 8}, 3);
  im.task = Task::Tangram;
  try {
    evaluate_maze(im, FrameSequence(1, Frame(kMazeCanvasW, kMazeCanvasH)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TaskMismatch);
  }
}
