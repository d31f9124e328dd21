#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpb/error.hpp"
#include "fpb/manifest.hpp"
#include "fpb/maze_gen.hpp"
#include "fpb/rng.hpp"
#include "fpb/tangram_gen.hpp"

namespace fpb {

using detail::enc;

enum class PerturbMode { WrongTurn, WallCross, Teleport, Freeze, ShapeDistort, ColorDrift, PieceVanish };

inline constexpr std::array<PerturbMode, 7> kPerturbModes{PerturbMode::WrongTurn,    PerturbMode::WallCross,
                                                          PerturbMode::Teleport,     PerturbMode::Freeze,
                                                          PerturbMode::ShapeDistort, PerturbMode::ColorDrift,
                                                          PerturbMode::PieceVanish};

constexpr std::string_view to_string(PerturbMode m) noexcept
{
  switch (m) {
    case PerturbMode::WrongTurn: return "wrong_turn";
    case PerturbMode::WallCross: return "wall_cross";
    case PerturbMode::Teleport: return "teleport";
    case PerturbMode::Freeze: return "freeze";
    case PerturbMode::ShapeDistort: return "shape_distort";
    case PerturbMode::ColorDrift: return "color_drift";
    case PerturbMode::PieceVanish: return "piece_vanish";
  }
  return "?";
}

inline PerturbMode perturb_mode_from_string(std::string_view s)
{
  for (PerturbMode m : kPerturbModes) {
    if (to_string(m) == s) return m;
  }
  fail(ErrorCode::UsageError, "unknown perturbation mode '" + std::string(s) + "'");
}

inline bool applies_to(PerturbMode m, Task t) noexcept
{
  switch (m) {
    case PerturbMode::WrongTurn:
    case PerturbMode::Freeze: return true;
    case PerturbMode::WallCross:
    case PerturbMode::Teleport: return t == Task::Maze;
    case PerturbMode::ShapeDistort:
    case PerturbMode::ColorDrift:
    case PerturbMode::PieceVanish: return t == Task::Tangram;
  }
  return false;
}

/// Where a perturbation starts: a path step (maze) or a fraction of the video.
struct StepRef {
  bool fraction = true;
  double value = 0.5;

  static StepRef parse(std::string_view s)
  {
    StepRef r;
    r.fraction = s.find_first_of(".eE") != std::string_view::npos;
    r.value = parse_double(s);
    if (!r.fraction && r.value != std::floor(r.value)) fail(ErrorCode::UsageError, "at_step must be an integer or a fraction");
    return r;
  }
  std::string str() const { return fraction ? format_double(value) : std::to_string(static_cast<int>(value)); }
};

/// magnitude by mode:
///  wrong_turn   tangram: extra rotation of one piece in degrees, [5, 85]; maze: unused
///  shape_distort scale factor of one piece, [1.05, 3]
///  color_drift  hue shift reached at the last frame, in turns, [0.05, 0.5]
///  piece_vanish fraction of the video the piece is missing for, (0, 1]
///  wall_cross, teleport, freeze: unused
struct PerturbSpec {
  PerturbMode mode = PerturbMode::WrongTurn;
  std::optional<double> magnitude;
  StepRef at;
  int piece = -1;  // tangram piece, -1 picks one from the instance seed

  double magnitude_or_default() const
  {
    if (magnitude) return *magnitude;
    switch (mode) {
      case PerturbMode::WrongTurn: return 30.0;
      case PerturbMode::ShapeDistort: return 1.5;
      case PerturbMode::ColorDrift: return 0.25;
      case PerturbMode::PieceVanish: return 0.5;
      default: return 0.0;
    }
  }
};

inline void validate_perturb(const PerturbSpec& p, Task task)
{
  if (!applies_to(p.mode, task)) {
    fail(ErrorCode::UsageError, std::string(to_string(p.mode)) + " does not apply to " + std::string(to_string(task)));
  }
  const double m = p.magnitude_or_default();
  auto range = [&](double lo, double hi) {
    if (!(m >= lo && m <= hi)) {
      fail(ErrorCode::UsageError, std::string(to_string(p.mode)) + " magnitude " + format_double(m) + " outside [" +
                                      format_double(lo) + ", " + format_double(hi) + "]");
    }
  };
  if (p.mode == PerturbMode::WrongTurn && task == Task::Tangram) range(5.0, 85.0);
  if (p.mode == PerturbMode::ShapeDistort) range(1.05, 3.0);
  if (p.mode == PerturbMode::ColorDrift) range(0.05, 0.5);
  if (p.mode == PerturbMode::PieceVanish) range(1e-9, 1.0);
  if (p.at.fraction && !(p.at.value >= 0.0 && p.at.value <= 1.0)) fail(ErrorCode::UsageError, "at_step fraction outside [0, 1]");
  if (!p.at.fraction && p.at.value < 0) fail(ErrorCode::UsageError, "at_step must be non-negative");
  if (p.piece < -1 || p.piece >= kPieceCount) fail(ErrorCode::UsageError, "piece id outside 0..6");
}

struct PerturbResult {
  FrameSequence frames;
  nlohmann::json details;
};

// ---------------------------------------------------------------------------
// Colour helpers

struct Hsv {
  double h, s, v;  // h in [0, 360)
};

inline Hsv to_hsv(ColorRGB c)
{
  const double r = c.r / 255.0, g = c.g / 255.0, b = c.b / 255.0;
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b}), d = mx - mn;
  double h = 0.0;
  if (d > 0) {
    if (mx == r) h = 60.0 * std::fmod((g - b) / d, 6.0);
    else if (mx == g) h = 60.0 * ((b - r) / d + 2.0);
    else h = 60.0 * ((r - g) / d + 4.0);
  }
  if (h < 0) h += 360.0;
  return {h, mx > 0 ? d / mx : 0.0, mx};
}

inline ColorRGB from_hsv(Hsv x)
{
  const double c = x.v * x.s;
  const double hp = std::fmod(x.h, 360.0) / 60.0;
  const double xx = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c, g = xx; break;
    case 1: r = xx, g = c; break;
    case 2: g = c, b = xx; break;
    case 3: g = xx, b = c; break;
    case 4: r = xx, b = c; break;
    default: r = c, b = xx; break;
  }
  const double m = x.v - c;
  auto q = [](double u) { return static_cast<std::uint8_t>(std::lround(std::clamp(u, 0.0, 1.0) * 255.0)); };
  return {q(r + m), q(g + m), q(b + m)};
}

inline ColorRGB shift_hue(ColorRGB c, double turns)
{
  Hsv h = to_hsv(c);
  // Grey has no hue; give it full saturation so the drift is visible.
  if (h.s < 0.2) h = {h.h, 1.0, std::max(h.v, 0.5)};
  h.h = std::fmod(h.h + 360.0 * turns + 360.0, 360.0);
  return from_hsv(h);
}

// ---------------------------------------------------------------------------
// Maze perturbations

namespace detail {

inline int path_step(const StepRef& at, int steps)
{
  const int s = at.fraction ? static_cast<int>(std::floor(at.value * steps)) : static_cast<int>(at.value);
  return std::clamp(s, 0, steps - 1);
}

inline FrameSchedule schedule_for_count(const InstanceManifest& im, int frame_count)
{
  const int steps = static_cast<int>(im.maze().actions.size());
  if (im.schedule.total_frames == frame_count) return resolve_schedule(im.schedule, steps);
  return resolve_schedule(fixed_total_schedule(frame_count, std::min(im.schedule.lead_hold, frame_count - steps)), steps);
}

inline std::vector<Cell> route(const MazeSpec& m, Cell from, Cell to)
{
  MazeSpec s = m;
  s.start = from;
  s.goal = to;
  if (from == to) return {from};
  return replay(s, from, solve_shortest_path(s));
}

inline nlohmann::json cells_json(const std::vector<Cell>& cells)
{
  nlohmann::json a = nlohmann::json::array();
  for (Cell c : cells) a.push_back(enc(c));
  return a;
}

/// Frame index at which the golden agent first reaches step `s`.
inline int frame_at_step(const FrameSchedule& sch, int steps, int s)
{
  for (int f = 0; f < sch.total_frames; ++f) {
    if (schedule_progress(sch, steps, f) >= s) return f;
  }
  return sch.total_frames - 1;
}

}  // namespace detail

/// Maze perturbations re-render the instance, so they need only the golden
/// frame count.
inline PerturbResult perturb_maze(const InstanceManifest& im, int frame_count, const PerturbSpec& spec)
{
  validate_perturb(spec, Task::Maze);
  const MazeBody& b = im.maze();
  const MazeSpec& m = b.spec;
  const int steps = static_cast<int>(b.actions.size());
  const FrameSchedule sch = detail::schedule_for_count(im, frame_count);
  const std::vector<Cell> golden = replay(m, m.start, b.actions);
  const int s = detail::path_step(spec.at, steps);
  PerturbResult out;
  out.details = {{"step", s}, {"steps", steps}};

  switch (spec.mode) {
    case PerturbMode::WrongTurn: {
      // First cell at or after s with an open neighbour off the golden path;
      // failing that, turn back.
      for (int i = s; i < steps; ++i) {
        for (Cell n : m.open_neighbours(golden[i])) {
          if (std::find(golden.begin(), golden.end(), n) != golden.end()) continue;
          std::vector<Cell> cells(golden.begin(), golden.begin() + i + 1);
          cells.push_back(n);
          out.details["step"] = i;
          out.details["cells"] = detail::cells_json(cells);
          out.frames = render_cell_path(b, cells, sch, steps);
          return out;
        }
      }
      const int i = std::max(s, 1);
      std::vector<Cell> cells(golden.begin(), golden.begin() + i + 1);
      cells.push_back(golden[i - 1]);
      out.details["step"] = i;
      out.details["cells"] = detail::cells_json(cells);
      out.frames = render_cell_path(b, cells, sch, steps);
      return out;
    }
    case PerturbMode::WallCross: {
      // Search forward from s, then backward, for a path cell with a walled
      // in-board neighbour; cross that wall and walk the open route to the goal.
      std::vector<int> order;
      for (int i = s; i < steps; ++i) order.push_back(i);
      for (int i = s - 1; i >= 0; --i) order.push_back(i);
      for (int i : order) {
        for (Action a : {Action::Up, Action::Down, Action::Left, Action::Right}) {
          const Cell n = step(golden[i], a);
          if (!m.in_bounds(n) || !m.blocked(golden[i], n)) continue;
          std::vector<Cell> cells(golden.begin(), golden.begin() + i + 1);
          const auto rest = detail::route(m, n, m.goal);
          cells.insert(cells.end(), rest.begin(), rest.end());
          out.details["step"] = i;
          out.details["wall"] = nlohmann::json::array({enc(golden[i]), enc(n)});
          out.details["cells"] = detail::cells_json(cells);
          out.frames = render_cell_path(b, cells, sch, static_cast<int>(cells.size()) - 1);
          return out;
        }
      }
      fail(ErrorCode::UsageError, im.instance_id + " has no wall next to its path");
    }
    case PerturbMode::Teleport: {
      // The agent vanishes from golden[s] and reappears at the cell farthest
      // from it, where it stays.
      const int f0 = detail::frame_at_step(sch, steps, s) + 1;
      Cell target = m.goal;
      double best = -1;
      for (int i = 0; i < m.cell_count(); ++i) {
        const Cell c = m.cell_at(i);
        const double d = std::hypot(c.r - golden[s].r, c.c - golden[s].c);
        if (d > best + 1e-9) best = d, target = c;
      }
      const BoardGeometry g = board_geometry(b);
      const IconSpec icon = icon_spec(m.icon_id);
      const Frame bg = render_maze_background(m, b.canvas_w, b.canvas_h);
      for (int f = 0; f < sch.total_frames; ++f) {
        Frame img = bg;
        const Point2 p = f < f0 ? path_position(golden, schedule_progress(sch, steps, f))
                                : Point2{static_cast<double>(target.r), static_cast<double>(target.c)};
        draw_agent(img, g, icon, p);
        out.frames.push_back(std::move(img));
      }
      out.details["jump_frame"] = f0;
      out.details["jump_to"] = enc(target);
      return out;
    }
    case PerturbMode::Freeze: {
      FrameSequence gold = render_cell_path(b, golden, sch, steps);
      const int f0 = spec.at.fraction ? static_cast<int>(std::lround(spec.at.value * (frame_count - 1)))
                                      : detail::frame_at_step(sch, steps, s);
      for (int f = f0 + 1; f < frame_count; ++f) gold[f] = gold[f0];
      out.details["freeze_frame"] = f0;
      out.frames = std::move(gold);
      return out;
    }
    default: break;
  }
  fail(ErrorCode::UsageError, "unsupported maze perturbation");
}

// ---------------------------------------------------------------------------
// Tangram perturbations

namespace detail {

inline int frame_from_fraction(double fraction, int frame_count)
{
  return std::clamp(static_cast<int>(std::lround(fraction * (frame_count - 1))), 0, frame_count - 1);
}

/// Piece whose rotation by `deg` about its centroid puts the most pixels
/// outside the silhouette.
inline int most_exposed_piece(const TangramScene& s, double deg)
{
  int best = 0;
  std::int64_t best_out = -1;
  for (int id = 0; id < kPieceCount; ++id) {
    const PieceRecord& p = s.pieces[id];
    const Polygon target = posed_polygon(p, p.target_pose);
    const RasterMask r = rasterize(transform_polygon(target, deg, centroid(target), {}), s.canvas_w, s.canvas_h);
    std::int64_t outside = 0;
    const auto& rb = r.bits();
    const auto& sb = s.silhouette.bits();
    for (std::size_t i = 0; i < rb.size(); ++i) outside += rb[i] && !sb[i];
    if (outside > best_out) best_out = outside, best = id;
  }
  return best;
}

}  // namespace detail

/// Tangram perturbations re-render the scene with overrides; `frame_count`
/// is the golden video length.
inline PerturbResult perturb_tangram(const InstanceManifest& im, int frame_count, const FrameSequence* golden,
                                     const PerturbSpec& spec)
{
  validate_perturb(spec, Task::Tangram);
  const TangramScene& sc = im.tangram();
  const auto windows = piece_windows(sc.order, frame_count);
  const double mag = spec.magnitude_or_default();
  Rng rng(derive_seed(im.seed, "perturb_piece"));
  int piece = spec.piece >= 0 ? spec.piece : static_cast<int>(rng.below(kPieceCount));
  PerturbResult out;
  auto window_of = [&](int id) {
    for (const auto& w : windows) {
      if (w.piece_id == id) return w;
    }
    return windows.front();
  };
  auto render = [&](const RenderOverrides& ov) {
    FrameSequence f;
    for (int i = 0; i < frame_count; ++i) f.push_back(render_tangram_frame(sc, windows, i, ov));
    return f;
  };

  switch (spec.mode) {
    case PerturbMode::WrongTurn: {
      // The piece lands at a wrong final orientation and is drawn last.
      if (spec.piece < 0) piece = detail::most_exposed_piece(sc, mag);
      RenderOverrides ov;
      ov.piece = piece;
      ov.from_frame = window_of(piece).last_frame();
      ov.rotate_deg = mag;
      ov.draw_on_top = true;
      out.frames = render(ov);
      out.details = {{"piece", piece}, {"from_frame", ov.from_frame}, {"rotate_deg", enc(mag)}};
      return out;
    }
    case PerturbMode::Freeze: {
      if (!golden) fail(ErrorCode::UsageError, "freeze needs the golden frames");
      out.frames = *golden;
      const int f0 = spec.at.fraction ? detail::frame_from_fraction(spec.at.value, frame_count)
                                      : std::clamp(static_cast<int>(spec.at.value), 0, frame_count - 1);
      for (int f = f0 + 1; f < frame_count; ++f) out.frames[f] = out.frames[f0];
      out.details = {{"freeze_frame", f0}};
      return out;
    }
    case PerturbMode::ShapeDistort: {
      // Scaled from its placement onward and drawn above the others, so the
      // distortion is fully visible.
      RenderOverrides ov;
      ov.piece = piece;
      ov.from_frame = window_of(piece).last_frame();
      ov.scale = mag;
      ov.draw_on_top = true;
      out.frames = render(ov);
      out.details = {{"piece", piece}, {"from_frame", ov.from_frame}, {"scale", enc(mag)}};
      return out;
    }
    case PerturbMode::ColorDrift: {
      // Hue moves linearly from the start frame to `mag` turns at the end.
      const int f0 = spec.at.fraction ? detail::frame_from_fraction(spec.at.value, frame_count)
                                      : std::clamp(static_cast<int>(spec.at.value), 0, frame_count - 1);
      const ColorRGB base = sc.pieces[piece].color;
      for (int f = 0; f < frame_count; ++f) {
        RenderOverrides ov;
        if (f >= f0) {
          const double t = frame_count - 1 > f0 ? static_cast<double>(f - f0) / (frame_count - 1 - f0) : 1.0;
          ov.piece = piece;
          ov.from_frame = f0;
          ov.color = shift_hue(base, mag * t);
        }
        out.frames.push_back(render_tangram_frame(sc, windows, f, ov));
      }
      out.details = {{"piece", piece}, {"from_frame", f0}, {"final_color", enc(shift_hue(base, mag))}};
      return out;
    }
    case PerturbMode::PieceVanish: {
      RenderOverrides ov;
      ov.from_frame = detail::frame_from_fraction(1.0 - mag, frame_count);
      if (spec.piece < 0 && sc.variant == TangramVariant::FadeIn) {
        // Only a piece already on screen can vanish; Fade-In pieces appear
        // one by one.
        std::vector<int> shown;
        for (const auto& w : windows) {
          if (w.last_frame() <= ov.from_frame) shown.push_back(w.piece_id);
        }
        piece = shown.empty() ? sc.order[0] : shown[rng.below(shown.size())];
      }
      ov.piece = piece;
      ov.hidden = true;
      out.frames = render(ov);
      out.details = {{"piece", piece}, {"from_frame", ov.from_frame}, {"vanish_fraction", enc(mag)}};
      return out;
    }
    default: break;
  }
  fail(ErrorCode::UsageError, "unsupported tangram perturbation");
}

inline PerturbResult perturb_instance(const InstanceManifest& im, const FrameSequence& golden, const PerturbSpec& spec)
{
  validate_sequence(golden);
  const int n = static_cast<int>(golden.size());
  PerturbResult r = im.task == Task::Maze ? perturb_maze(im, n, spec) : perturb_tangram(im, n, &golden, spec);
  r.details["instance_id"] = im.instance_id;
  r.details["mode"] = std::string(to_string(spec.mode));
  r.details["magnitude"] = enc(spec.magnitude_or_default());
  r.details["at_step"] = spec.at.str();
  return r;
}

}  // namespace fpb
