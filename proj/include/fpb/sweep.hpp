#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fpb/config.hpp"
#include "fpb/harness.hpp"
#include "fpb/parallel.hpp"
#include "fpb/report.hpp"
#include "fpb/rng.hpp"
#include "fpb/schedule.hpp"

namespace fpb {

enum class SweepAxis { TotalFrames, Kappa };

constexpr std::string_view to_string(SweepAxis a) noexcept { return a == SweepAxis::Kappa ? "kappa" : "total_frames"; }

inline SweepAxis sweep_axis_from_string(std::string_view s)
{
  if (s == "total_frames") return SweepAxis::TotalFrames;
  if (s == "kappa") return SweepAxis::Kappa;
  fail(ErrorCode::UsageError, "sweep axis must be total_frames or kappa, got '" + std::string(s) + "'");
}

struct SweepConfig {
  SweepAxis axis = SweepAxis::TotalFrames;
  std::vector<int> values;
  std::vector<std::string> splits;
  int instances_per_cell = 10;
  std::uint64_t seed = 0;
  int lead_hold = 4;  // kappa axis: holds around the motion frames
  int tail_hold = 0;
};

inline void validate_sweep(const SweepConfig& s)
{
  if (s.values.empty()) fail(ErrorCode::UsageError, "sweep needs at least one value");
  for (int v : s.values) {
    if (v < 1) fail(ErrorCode::UsageError, "sweep values must be positive");
    if (s.axis == SweepAxis::Kappa && v < 3) fail(ErrorCode::UsageError, "kappa values must be at least 3");
  }
  if (s.splits.empty()) fail(ErrorCode::UsageError, "sweep needs at least one split");
  if (s.instances_per_cell < 1) fail(ErrorCode::UsageError, "instances_per_cell must be positive");
  if (s.lead_hold < 0 || s.tail_hold < 0) fail(ErrorCode::UsageError, "holds must be non-negative");
}

/// The schedule a sweep cell asks for, before resolution against a path.
inline FrameSchedule sweep_schedule(const SweepConfig& s, int value)
{
  return s.axis == SweepAxis::Kappa ? per_step_schedule(value, s.lead_hold, s.tail_hold) : fixed_total_schedule(value, s.lead_hold);
}

struct SweepCell {
  int value = 0;
  std::string split;
  int instances = 0;
  int scored = 0;
  bool valid = true;
  std::string note;
  int total_min = 0, total_max = 0;    // frames per video
  int motion_min = 0, motion_max = 0;  // kappa * steps
  std::map<std::string, double> means;  // percent
};

/// Instances of a split chosen for every cell of that split: a seeded
/// shuffle of the matching ids, truncated to `count`.
inline std::vector<std::size_t> sweep_selection(const std::vector<InstanceManifest>& ims, const std::string& split, int count,
                                                std::uint64_t seed)
{
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ims.size(); ++i) {
    if (ims[i].has_split(split)) idx.push_back(i);
  }
  Rng rng(derive_seed(seed, "sweep/" + split));
  rng.shuffle(idx);
  if (static_cast<int>(idx.size()) > count) idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// For each (value, split) cell: resolve and check the schedule of every
/// selected instance, synthesise its golden video at that budget, and score
/// either the golden video or <candidates>/<axis>_<value>/<id>/ when a root
/// is given. A schedule violation marks the cell invalid.
inline std::vector<SweepCell> run_sweep(const SweepConfig& sc, const std::vector<InstanceManifest>& ims, const HarnessConfig& cfg,
                                        int workers, const std::filesystem::path& candidates = {})
{
  validate_sweep(sc);
  std::vector<SweepCell> cells;
  for (const auto& split : sc.splits) {
    const auto sel = sweep_selection(ims, split, sc.instances_per_cell, sc.seed);
    for (int v : sc.values) {
      SweepCell cell;
      cell.value = v;
      cell.split = split;
      cell.instances = static_cast<int>(sel.size());
      if (sel.empty()) {
        cell.valid = false;
        cell.note = "no instances with this split";
        cells.push_back(cell);
        continue;
      }
      std::vector<EvalReport> reports(sel.size());
      std::vector<std::string> errors(sel.size());
      std::vector<int> totals(sel.size()), motion(sel.size());
      parallel_for(sel.size(), workers, [&](std::size_t k) {
        const InstanceManifest& im = ims[sel[k]];
        try {
          HarnessConfig c = cfg;
          FrameSequence gold;
          if (im.task == Task::Maze) {
            const int steps = static_cast<int>(im.maze().actions.size());
            const FrameSchedule s = resolve_schedule(sweep_schedule(sc, v), steps);
            if (s.total_frames != s.lead_hold + s.kappa * steps + s.tail_hold) {
              fail(ErrorCode::ScheduleError, im.instance_id + ": frame arithmetic does not add up");
            }
            gold = synthesize_solution_video(im, s);
            totals[k] = s.total_frames;
            motion[k] = s.kappa * steps;
          } else {
            if (sc.axis == SweepAxis::Kappa) fail(ErrorCode::UsageError, "kappa sweeps apply to maze instances only");
            gold = synthesize_assembly_video(im.tangram(), v);
            totals[k] = motion[k] = v;
          }
          if (static_cast<int>(gold.size()) != totals[k]) fail(ErrorCode::ScheduleError, im.instance_id + ": wrong frame count");
          if (candidates.empty()) {
            reports[k] = evaluate_instance(im, gold, c, &gold);
          } else {
            const auto dir = candidates / (std::string(to_string(sc.axis)) + "_" + std::to_string(v)) / im.instance_id;
            reports[k] = evaluate_dataset({im}, dir.parent_path(), c, 1).front();
          }
        } catch (const Error& e) {
          errors[k] = e.what();
        }
      });
      std::vector<EvalReport> ok;
      for (std::size_t k = 0; k < sel.size(); ++k) {
        if (!errors[k].empty()) {
          cell.valid = false;
          if (cell.note.empty()) cell.note = errors[k];
          continue;
        }
        ok.push_back(reports[k]);
      }
      cell.scored = static_cast<int>(ok.size());
      if (cell.valid) {
        cell.total_min = *std::min_element(totals.begin(), totals.end());
        cell.total_max = *std::max_element(totals.begin(), totals.end());
        cell.motion_min = *std::min_element(motion.begin(), motion.end());
        cell.motion_max = *std::max_element(motion.begin(), motion.end());
        for (auto& r : ok) r.splits = {split};
        for (const auto& g : group_means(ok)) {
          for (const auto& [m, x] : g.means) cell.means[m] = x;
        }
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

inline std::string sweep_csv(const SweepConfig& sc, const std::vector<SweepCell>& cells)
{
  std::vector<std::string> metrics;
  for (const auto& c : cells) {
    for (const auto& [m, v] : c.means) {
      if (std::find(metrics.begin(), metrics.end(), m) == metrics.end()) metrics.push_back(m);
    }
  }
  std::ostringstream o;
  o << "axis,value,split,instances,scored,valid,total_frames_min,total_frames_max,motion_frames_min,motion_frames_max,metric,"
       "percent,note\n";
  for (const auto& c : cells) {
    auto row = [&](const std::string& metric, const std::string& value) {
      o << to_string(sc.axis) << ',' << c.value << ',' << csv_escape(c.split) << ',' << c.instances << ',' << c.scored << ','
        << (c.valid ? 1 : 0) << ',' << c.total_min << ',' << c.total_max << ',' << c.motion_min << ',' << c.motion_max << ','
        << metric << ',' << value << ',' << csv_escape(c.note) << '\n';
    };
    if (!c.valid || c.means.empty()) {
      row("", "");
      continue;
    }
    for (const auto& m : metrics) {
      if (c.means.count(m)) row(m, format_sig6(c.means.at(m)));
    }
  }
  return o.str();
}

/// Primary metric (em or strict_gc) against the axis, one polyline per split.
inline std::string sweep_svg(const SweepConfig& sc, const std::vector<SweepCell>& cells)
{
  std::vector<PlotSeries> series;
  for (const auto& split : sc.splits) {
    PlotSeries s;
    s.name = split;
    for (const auto& c : cells) {
      if (c.split != split || !c.valid) continue;
      const auto it = c.means.count("em") ? c.means.find("em") : c.means.find("strict_gc");
      if (it != c.means.end()) s.points.push_back({static_cast<double>(c.value), it->second});
    }
    series.push_back(std::move(s));
  }
  return line_plot_svg("Success rate against " + std::string(to_string(sc.axis)), std::string(to_string(sc.axis)), "percent",
                       series);
}

}  // namespace fpb
