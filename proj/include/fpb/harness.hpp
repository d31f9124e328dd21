#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpb/config.hpp"
#include "fpb/dataset.hpp"
#include "fpb/eval_maze.hpp"
#include "fpb/eval_tangram.hpp"
#include "fpb/frame_io.hpp"
#include "fpb/parallel.hpp"
#include "fpb/perturb.hpp"
#include "fpb/report.hpp"

namespace fpb {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// synthesize

enum class OutputState { Absent, Partial, Complete };

/// A frame directory is complete when it holds exactly `expected`
/// contiguous frames that decode to one shape.
inline OutputState output_state(const fs::path& dir, int expected)
{
  if (!fs::exists(dir)) return OutputState::Absent;
  const auto files = list_frame_files(dir);
  if (files.empty()) return OutputState::Absent;
  if (static_cast<int>(files.size()) != expected) return OutputState::Partial;
  for (int i = 0; i < expected; ++i) {
    if (files[i].first != i) return OutputState::Partial;
  }
  try {
    read_frames(dir);
  } catch (const Error&) {
    return OutputState::Partial;
  }
  return OutputState::Complete;
}

struct SynthesizeStats {
  int written = 0;
  int skipped = 0;
};

/// Renders golden videos into <out>/<id>/. Complete outputs are skipped
/// unless `force`; partial ones stop the run before anything is written.
inline SynthesizeStats synthesize_dataset(const std::vector<InstanceManifest>& ims, const fs::path& out, const HarnessConfig& cfg,
                                          int workers, bool force)
{
  std::vector<int> lengths(ims.size());
  std::vector<OutputState> states(ims.size());
  parallel_for(ims.size(), workers, [&](std::size_t i) {
    lengths[i] = synthesis_length(ims[i], cfg);
    states[i] = force ? OutputState::Absent : output_state(out / ims[i].instance_id, lengths[i]);
  });
  std::string offenders;
  for (std::size_t i = 0; i < ims.size(); ++i) {
    if (states[i] == OutputState::Partial) offenders += "\n  " + (out / ims[i].instance_id).string();
  }
  if (!offenders.empty()) fail(ErrorCode::UsageError, "partial output from an earlier run (use --force):" + offenders);
  SynthesizeStats st;
  std::atomic<int> written{0};
  parallel_for(ims.size(), workers, [&](std::size_t i) {
    if (states[i] == OutputState::Complete) return;
    write_frames(synthesize_golden(ims[i], cfg), out / ims[i].instance_id);
    ++written;
  });
  st.written = written;
  st.skipped = static_cast<int>(ims.size()) - st.written;
  return st;
}

// ---------------------------------------------------------------------------
// evaluate

inline EvalReport empty_report(const InstanceManifest& im)
{
  EvalReport r;
  r.instance_id = im.instance_id;
  r.task = im.task;
  if (im.task == Task::Tangram) r.variant = std::string(to_string(im.tangram().variant));
  r.splits = im.splits;
  for (const auto& m : metric_names(im.task)) r.metrics[m] = 0.0;
  return r;
}

inline EvalReport evaluate_instance(const InstanceManifest& im, const FrameSequence& frames, const HarnessConfig& cfg,
                                    const FrameSequence* golden = nullptr)
{
  if (im.task == Task::Maze) return evaluate_maze(im, frames, cfg.maze);
  return evaluate_tangram(im, frames, cfg.tangram, golden);
}

/// Scores <candidates>/<id>/ for every manifest. Missing candidates fail with
/// the "missing" tag; unreadable or unscorable ones carry an error entry.
/// `golden_root`, when given, supplies reference videos for tangram
/// consistency flags.
inline std::vector<EvalReport> evaluate_dataset(const std::vector<InstanceManifest>& ims, const fs::path& candidates,
                                                const HarnessConfig& cfg, int workers, const fs::path& golden_root = {})
{
  std::vector<EvalReport> out(ims.size());
  parallel_for(ims.size(), workers, [&](std::size_t i) {
    const InstanceManifest& im = ims[i];
    const fs::path dir = candidates / im.instance_id;
    EvalReport r = empty_report(im);
    if (!fs::is_directory(dir) || list_frame_files(dir).empty()) {
      r.add_tag(tag::kMissing);
      out[i] = std::move(r);
      return;
    }
    try {
      const FrameSequence frames = read_frames(dir);
      std::optional<FrameSequence> golden;
      if (im.task == Task::Tangram && !golden_root.empty() && fs::is_directory(golden_root / im.instance_id)) {
        golden = read_frames(golden_root / im.instance_id);
      }
      out[i] = evaluate_instance(im, frames, cfg, golden ? &*golden : nullptr);
    } catch (const Error& e) {
      r.error = e.what();
      r.add_tag(tag::kError);
      out[i] = std::move(r);
    }
  });
  return out;
}

inline void write_reports(const std::vector<EvalReport>& reports, const fs::path& out)
{
  for (const auto& r : reports) write_report(r, out / r.instance_id / "report.json");
  write_text_file(out / "aggregate.csv", aggregate_csv(reports));
}

// ---------------------------------------------------------------------------
// perturb

/// Applies `spec` to every golden video under <golden>/<id>/ and writes
/// <out>/<id>/ frames plus perturb.json.
inline int perturb_dataset(const std::vector<InstanceManifest>& ims, const fs::path& golden, const PerturbSpec& spec,
                           const fs::path& out, int workers)
{
  for (const auto& im : ims) validate_perturb(spec, im.task);
  parallel_for(ims.size(), workers, [&](std::size_t i) {
    const InstanceManifest& im = ims[i];
    const FrameSequence g = read_frames(golden / im.instance_id);
    PerturbResult r = perturb_instance(im, g, spec);
    write_frames(r.frames, out / im.instance_id);
    write_text_file(out / im.instance_id / "perturb.json", r.details.dump(2) + "\n");
  });
  return static_cast<int>(ims.size());
}

// ---------------------------------------------------------------------------
// report

struct ReportBundle {
  std::string csv;
  nlohmann::json json;
  std::string svg;
};

inline nlohmann::json aggregate_json(const std::vector<EvalReport>& reports)
{
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : group_means(reports)) {
    nlohmann::json m = nlohmann::json::object();
    for (const auto& [k, v] : g.means) m[k] = format_sig6(v);
    groups.push_back({{"task", std::get<0>(g.key)},
                      {"variant", std::get<1>(g.key)},
                      {"split", std::get<2>(g.key)},
                      {"count", g.count},
                      {"means", m}});
  }
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [k, v] : tag_histogram(reports)) hist[k] = v;
  int failed = 0;
  for (const auto& r : reports) failed += !r.passed();
  nlohmann::json corr;
  try {
    corr = {{"value", format_sig6(consistency_success_correlation(reports))}};
  } catch (const Error& e) {
    corr = {{"value", nullptr}, {"reason", e.what()}};
  }
  return {{"schema_version", kSchemaVersion}, {"instances", reports.size()}, {"failed", failed},
          {"groups", groups},                 {"tag_histogram", hist},       {"consistency_success_correlation", corr}};
}

namespace detail {

inline std::string svg_escape(const std::string& s)
{
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

}  // namespace detail

struct PlotSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (x, y in percent)
};

/// Static line chart, y fixed to 0..100, one polyline per series.
inline std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                                 const std::vector<PlotSeries>& series, const std::vector<std::string>& x_ticks = {})
{
  constexpr double W = 640, H = 400, L = 60, R = 170, T = 40, B = 50;
  double x0 = 0, x1 = 1;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (first) x0 = x1 = x, first = false;
      x0 = std::min(x0, x), x1 = std::max(x1, x);
    }
  }
  if (x1 == x0) x0 -= 1, x1 += 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - std::clamp(y, 0.0, 100.0) / 100.0 * (H - T - B); };
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' ' << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 - R / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << detail::svg_escape(title)
    << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    o << "<text x=\"" << L - 6 << "\" y=\"" << py(25.0 * k) + 4 << "\" text-anchor=\"end\">" << 25 * k << "</text>\n";
  }
  std::set<double> xs;
  for (const auto& s : series) {
    for (const auto& p : s.points) xs.insert(p.first);
  }
  int tick = 0;
  for (double x : xs) {
    const std::string label = tick < static_cast<int>(x_ticks.size()) ? x_ticks[tick] : format_sig6(x);
    o << "<text x=\"" << px(x) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << detail::svg_escape(label)
      << "</text>\n";
    ++tick;
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << detail::svg_escape(x_label)
    << "</text>\n";
  o << "<text transform=\"translate(16," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << detail::svg_escape(y_label) << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* c = palette[i % 8];
    o << "<polyline class=\"series\" data-series=\"" << detail::svg_escape(series[i].name) << "\" fill=\"none\" stroke=\"" << c
      << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < series[i].points.size(); ++k) {
      o << (k ? " " : "") << px(series[i].points[k].first) << ',' << py(series[i].points[k].second);
    }
    o << "\"/>\n";
    const double ly = T + 10 + 18.0 * static_cast<double>(i);
    o << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 32 << "\" y2=\"" << ly << "\" stroke=\"" << c
      << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << W - R + 38 << "\" y=\"" << ly + 4 << "\">" << detail::svg_escape(series[i].name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

/// Report plot: per split, the group means across the metric columns.
inline std::string report_svg(const std::vector<EvalReport>& reports)
{
  std::vector<PlotSeries> series;
  std::vector<std::string> ticks;
  for (Task t : {Task::Maze, Task::Tangram}) {
    const auto& names = metric_names(t);
    for (const auto& g : group_means(reports)) {
      if (std::get<0>(g.key) != to_string(t)) continue;
      PlotSeries s;
      s.name = std::string(to_string(t)) + (std::get<1>(g.key).empty() ? "" : "/" + std::get<1>(g.key)) + "/" + std::get<2>(g.key);
      for (std::size_t k = 0; k < names.size(); ++k) s.points.push_back({static_cast<double>(k), g.means.at(names[k])});
      series.push_back(std::move(s));
    }
    if (ticks.empty() && !series.empty()) ticks = names;
  }
  return line_plot_svg("Mean metrics by split", "metric", "percent", series, ticks);
}

inline ReportBundle build_report(const std::vector<EvalReport>& reports)
{
  if (reports.empty()) fail(ErrorCode::UsageError, "no reports to aggregate");
  return {aggregate_csv(reports), aggregate_json(reports), report_svg(reports)};
}

}  // namespace fpb
