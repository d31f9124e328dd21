#pragma once

#include <string>
#include <string_view>

#include "fpb/error.hpp"

namespace fpb {

enum class ScheduleMode { FixedTotal, PerStep };

constexpr std::string_view to_string(ScheduleMode m) noexcept
{
  return m == ScheduleMode::FixedTotal ? "fixed_total" : "per_step";
}

inline ScheduleMode schedule_mode_from_string(std::string_view s)
{
  if (s == "fixed_total") return ScheduleMode::FixedTotal;
  if (s == "per_step") return ScheduleMode::PerStep;
  fail(ErrorCode::ParseError, "unknown schedule mode '" + std::string(s) + "'");
}

/// Frame budget for a maze solution video. After resolve_schedule() every
/// field is filled and total_frames = lead_hold + kappa * steps + tail_hold.
struct FrameSchedule {
  ScheduleMode mode = ScheduleMode::FixedTotal;
  int total_frames = 81;
  int kappa = 0;
  int lead_hold = 4;
  int tail_hold = 0;

  friend bool operator==(const FrameSchedule&, const FrameSchedule&) = default;
};

inline FrameSchedule default_schedule() { return {}; }

inline FrameSchedule per_step_schedule(int kappa, int lead_hold = 0, int tail_hold = 0)
{
  return {ScheduleMode::PerStep, 0, kappa, lead_hold, tail_hold};
}

inline FrameSchedule fixed_total_schedule(int total_frames, int lead_hold = 4)
{
  return {ScheduleMode::FixedTotal, total_frames, 0, lead_hold, 0};
}

/// Fills the derived fields for a path of `steps` actions.
///  fixed_total: kappa = floor((total - lead) / steps), tail takes the rest.
///  per_step: total = lead + kappa * steps + tail; a non-zero requested total
///  that disagrees is an error.
inline FrameSchedule resolve_schedule(const FrameSchedule& s, int steps)
{
  if (steps < 1) fail(ErrorCode::ScheduleError, "schedule needs at least one step");
  if (s.lead_hold < 0 || s.tail_hold < 0) fail(ErrorCode::ScheduleError, "holds must be non-negative");
  FrameSchedule out = s;
  if (s.mode == ScheduleMode::FixedTotal) {
    if (s.total_frames < 1) fail(ErrorCode::ScheduleError, "total_frames must be positive");
    out.kappa = (s.total_frames - s.lead_hold) / steps;
    if (s.total_frames - s.lead_hold < steps || out.kappa < 1) {
      fail(ErrorCode::ScheduleError, "fixed_total budget " + std::to_string(s.total_frames) + " leaves under one frame per step for " +
                                         std::to_string(steps) + " steps");
    }
    out.tail_hold = s.total_frames - s.lead_hold - out.kappa * steps;
  } else {
    if (s.kappa < 1) fail(ErrorCode::ScheduleError, "kappa must be at least 1");
    const int total = s.lead_hold + s.kappa * steps + s.tail_hold;
    if (s.total_frames != 0 && s.total_frames != total) {
      fail(ErrorCode::ScheduleError, "per_step total " + std::to_string(s.total_frames) + " != lead + kappa*steps + tail = " +
                                         std::to_string(total));
    }
    out.total_frames = total;
  }
  return out;
}

/// Path progress (in steps, 0..steps) shown at frame f of a resolved schedule.
/// Motion frame m = f - lead + 1 shows progress m / kappa.
inline double schedule_progress(const FrameSchedule& s, int steps, int f) noexcept
{
  const int m = f - s.lead_hold + 1;
  if (m <= 0) return 0.0;
  if (m >= s.kappa * steps) return steps;
  return static_cast<double>(m) / s.kappa;
}

}  // namespace fpb
