#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "fpb/error.hpp"
#include "fpb/eval_maze.hpp"
#include "fpb/eval_tangram.hpp"
#include "fpb/manifest.hpp"
#include "fpb/schedule.hpp"

namespace fpb {

/// Settings a run can override from a flat key=value file.
struct HarnessConfig {
  MazeEvalParams maze;
  TangramEvalParams tangram;
  // Schedule overrides for golden synthesis; unset keeps the manifest value.
  std::optional<ScheduleMode> maze_mode;
  std::optional<int> maze_total_frames;
  std::optional<int> maze_kappa;
  std::optional<int> maze_lead_hold;
  std::optional<int> maze_tail_hold;
  std::optional<int> tangram_total_frames;
};

namespace detail {

inline std::string trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline int parse_int(std::string_view key, std::string_view v)
{
  try {
    std::size_t used = 0;
    const int x = std::stoi(std::string(v), &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::UsageError, std::string(key) + ": expected an integer, got '" + std::string(v) + "'");
}

inline double parse_real(std::string_view key, std::string_view v)
{
  try {
    return parse_double(v);
  } catch (const Error&) {
    fail(ErrorCode::UsageError, std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  }
}

}  // namespace detail

inline const std::map<std::string, std::function<void(HarnessConfig&, std::string_view)>, std::less<>>& config_setters()
{
  using detail::parse_int;
  using detail::parse_real;
  using Setter = std::function<void(HarnessConfig&, std::string_view)>;
  static const std::map<std::string, Setter, std::less<>> table{
      {"eval.maze.tau", [](HarnessConfig& c, std::string_view v) { c.maze.tau = parse_int("eval.maze.tau", v); }},
      {"eval.maze.min_area", [](HarnessConfig& c, std::string_view v) { c.maze.min_area = parse_int("eval.maze.min_area", v); }},
      {"eval.maze.continuity_radius",
       [](HarnessConfig& c, std::string_view v) { c.maze.continuity_radius = parse_real("eval.maze.continuity_radius", v); }},
      {"eval.maze.resample_per_step",
       [](HarnessConfig& c, std::string_view v) { c.maze.resample_per_step = parse_int("eval.maze.resample_per_step", v); }},
      {"eval.maze.hysteresis", [](HarnessConfig& c, std::string_view v) { c.maze.hysteresis = parse_real("eval.maze.hysteresis", v); }},
      {"eval.maze.background",
       [](HarnessConfig& c, std::string_view v) {
         if (v != "rendered" && v != "median") fail(ErrorCode::UsageError, "eval.maze.background: rendered or median");
         c.maze.median_background = v == "median";
       }},
      {"eval.tangram.delta_col",
       [](HarnessConfig& c, std::string_view v) { c.tangram.delta_col = parse_real("eval.tangram.delta_col", v); }},
      {"eval.tangram.area_window",
       [](HarnessConfig& c, std::string_view v) {
         const auto comma = v.find(',');
         if (comma == std::string_view::npos) fail(ErrorCode::UsageError, "eval.tangram.area_window: expected lo,hi");
         c.tangram.area_lo = parse_real("eval.tangram.area_window", detail::trim(v.substr(0, comma)));
         c.tangram.area_hi = parse_real("eval.tangram.area_window", detail::trim(v.substr(comma + 1)));
         if (!(c.tangram.area_lo > 0 && c.tangram.area_lo < c.tangram.area_hi)) {
           fail(ErrorCode::UsageError, "eval.tangram.area_window: need 0 < lo < hi");
         }
       }},
      {"eval.tangram.angle_window",
       [](HarnessConfig& c, std::string_view v) {
         c.tangram.shape_rules.angle_tolerance = parse_real("eval.tangram.angle_window", v);
       }},
      {"eval.tangram.k_samples",
       [](HarnessConfig& c, std::string_view v) { c.tangram.k_samples = parse_int("eval.tangram.k_samples", v); }},
      {"eval.tangram.vc_mode",
       [](HarnessConfig& c, std::string_view v) {
         if (v == "reference") c.tangram.vc_mode = ConsistencyMode::Reference;
         else if (v == "static") c.tangram.vc_mode = ConsistencyMode::Static;
         else fail(ErrorCode::UsageError, "eval.tangram.vc_mode: reference or static");
       }},
      {"synth.maze.mode",
       [](HarnessConfig& c, std::string_view v) {
         try {
           c.maze_mode = schedule_mode_from_string(v);
         } catch (const Error&) {
           fail(ErrorCode::UsageError, "synth.maze.mode: fixed_total or per_step");
         }
       }},
      {"synth.maze.total_frames",
       [](HarnessConfig& c, std::string_view v) { c.maze_total_frames = parse_int("synth.maze.total_frames", v); }},
      {"synth.maze.kappa", [](HarnessConfig& c, std::string_view v) { c.maze_kappa = parse_int("synth.maze.kappa", v); }},
      {"synth.maze.lead_hold", [](HarnessConfig& c, std::string_view v) { c.maze_lead_hold = parse_int("synth.maze.lead_hold", v); }},
      {"synth.maze.tail_hold", [](HarnessConfig& c, std::string_view v) { c.maze_tail_hold = parse_int("synth.maze.tail_hold", v); }},
      {"synth.tangram.total_frames",
       [](HarnessConfig& c, std::string_view v) { c.tangram_total_frames = parse_int("synth.tangram.total_frames", v); }},
  };
  return table;
}

inline void apply_config_entry(HarnessConfig& cfg, std::string_view key, std::string_view value)
{
  const auto& t = config_setters();
  const auto it = t.find(key);
  if (it == t.end()) fail(ErrorCode::UsageError, "unknown config key '" + std::string(key) + "'");
  it->second(cfg, value);
}

/// Lines are `key = value`; blank lines and lines starting with # are skipped.
inline HarnessConfig parse_config(std::string_view text, HarnessConfig cfg = {})
{
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail(ErrorCode::UsageError, "config line " + std::to_string(n) + ": expected key = value");
    apply_config_entry(cfg, detail::trim(std::string_view(t).substr(0, eq)), detail::trim(std::string_view(t).substr(eq + 1)));
  }
  return cfg;
}

inline HarnessConfig load_config(const std::filesystem::path& path) { return parse_config(read_text_file(path)); }

/// Golden schedule for a maze manifest after config overrides.
inline FrameSchedule synthesis_schedule(const InstanceManifest& im, const HarnessConfig& cfg)
{
  FrameSchedule s = im.schedule;
  if (cfg.maze_mode) s.mode = *cfg.maze_mode;
  if (cfg.maze_total_frames) s.total_frames = *cfg.maze_total_frames;
  if (cfg.maze_kappa) s.kappa = *cfg.maze_kappa;
  if (cfg.maze_lead_hold) s.lead_hold = *cfg.maze_lead_hold;
  // A resolved fixed_total schedule carries a remainder tail that per_step
  // must not inherit.
  if (s.mode == ScheduleMode::PerStep && im.schedule.mode != ScheduleMode::PerStep) s.tail_hold = 0;
  if (cfg.maze_tail_hold) s.tail_hold = *cfg.maze_tail_hold;
  if (s.mode == ScheduleMode::PerStep && !cfg.maze_total_frames) s.total_frames = 0;
  return resolve_schedule(s, static_cast<int>(im.maze().actions.size()));
}

inline int synthesis_length(const InstanceManifest& im, const HarnessConfig& cfg)
{
  if (im.task == Task::Maze) return synthesis_schedule(im, cfg).total_frames;
  return cfg.tangram_total_frames.value_or(im.tangram().total_frames);
}

inline FrameSequence synthesize_golden(const InstanceManifest& im, const HarnessConfig& cfg)
{
  if (im.task == Task::Maze) return synthesize_solution_video(im, synthesis_schedule(im, cfg));
  return synthesize_assembly_video(im.tangram(), synthesis_length(im, cfg));
}

}  // namespace fpb
