#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpb/error.hpp"
#include "fpb/manifest.hpp"

namespace fpb {

namespace tag {
inline constexpr std::string_view kBoundaryViolation = "boundary violation";
inline constexpr std::string_view kKinematic = "kinematic inconsistency";
inline constexpr std::string_view kStructural = "structural distortion";
inline constexpr std::string_view kChromatic = "chromatic distortion";
inline constexpr std::string_view kCentroid = "centroid displacement";
inline constexpr std::string_view kAngular = "angular deviation";
inline constexpr std::string_view kPathDeviation = "path deviation";
inline constexpr std::string_view kTrackingFailure = "tracking failure";
inline constexpr std::string_view kMissing = "missing";
inline constexpr std::string_view kError = "error";
}  // namespace tag

struct EvalReport {
  std::string instance_id;
  Task task = Task::Maze;
  std::string variant;  // tangram variant, empty for maze
  std::vector<std::string> splits;
  std::map<std::string, double> metrics;
  std::vector<std::string> failure_tags;
  nlohmann::json diagnostics = nlohmann::json::object();
  std::string error;  // set when the candidate could not be evaluated

  bool passed() const
  {
    if (!error.empty()) return false;
    const auto key = task == Task::Maze ? "em" : "strict_gc";
    const auto it = metrics.find(key);
    return it != metrics.end() && it->second == 1.0;
  }

  void add_tag(std::string_view t)
  {
    if (std::find(failure_tags.begin(), failure_tags.end(), t) == failure_tags.end()) failure_tags.emplace_back(t);
  }
};

inline const std::vector<std::string>& metric_names(Task t)
{
  static const std::vector<std::string> maze{"em", "pr"};
  static const std::vector<std::string> tangram{"strict_gc", "progress_gc", "boundary_iou", "visual_consistency"};
  return t == Task::Maze ? maze : tangram;
}

/// Value rounded to six significant digits, the precision of every report.
inline double round_sig6(double v) { return parse_double(format_sig6(v)); }

inline void check_report(const EvalReport& r)
{
  for (const auto& [k, v] : r.metrics) {
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::InvalidManifest, r.instance_id + ": metric " + k + " outside [0,1]");
  }
  auto get = [&](const char* k) { return r.metrics.count(k) ? r.metrics.at(k) : 0.0; };
  if (r.task == Task::Maze && get("em") == 1.0 && get("pr") != 1.0) {
    fail(ErrorCode::InvalidManifest, r.instance_id + ": em = 1 requires pr = 1");
  }
  if (r.task == Task::Tangram && ((get("strict_gc") == 1.0) != (get("progress_gc") == 1.0))) {
    fail(ErrorCode::InvalidManifest, r.instance_id + ": strict_gc = 1 iff progress_gc = 1");
  }
}

inline nlohmann::json report_to_json(const EvalReport& r)
{
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [k, v] : r.metrics) metrics[k] = round_sig6(v);
  nlohmann::json j{{"schema_version", kSchemaVersion},
                   {"instance_id", r.instance_id},
                   {"task", to_string(r.task)},
                   {"splits", r.splits},
                   {"metrics", metrics},
                   {"failure_tags", r.failure_tags},
                   {"diagnostics", r.diagnostics}};
  if (!r.variant.empty()) j["variant"] = r.variant;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

inline EvalReport report_from_json(const nlohmann::json& j)
{
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) fail(ErrorCode::VersionError, "unsupported report schema_version");
    EvalReport r;
    r.instance_id = j.at("instance_id").get<std::string>();
    r.task = task_from_string(j.at("task").get<std::string>());
    r.variant = j.value("variant", std::string{});
    r.splits = j.at("splits").get<std::vector<std::string>>();
    for (const auto& [k, v] : j.at("metrics").items()) r.metrics[k] = v.get<double>();
    r.failure_tags = j.at("failure_tags").get<std::vector<std::string>>();
    r.diagnostics = j.value("diagnostics", nlohmann::json::object());
    r.error = j.value("error", std::string{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("report schema: ") + e.what());
  }
}

inline void write_report(const EvalReport& r, const std::filesystem::path& path)
{
  check_report(r);
  write_text_file(path, report_to_json(r).dump(2) + "\n");
}

inline EvalReport read_report(const std::filesystem::path& path)
{
  try {
    return report_from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

/// Every report.json below `dir`, sorted by instance id.
inline std::vector<EvalReport> load_reports(const std::filesystem::path& dir)
{
  std::vector<EvalReport> out;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() == "report.json") out.push_back(read_report(e.path()));
  }
  std::sort(out.begin(), out.end(), [](const EvalReport& a, const EvalReport& b) { return a.instance_id < b.instance_id; });
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation

/// Grouping key of the mean rows: (task, variant, split tag).
using GroupKey = std::tuple<std::string, std::string, std::string>;

struct GroupMean {
  GroupKey key;
  int count = 0;
  std::map<std::string, double> means;  // percentages, six significant digits
};

/// Metric as a percentage rounded to six significant digits.
inline double percent(double v) { return round_sig6(100.0 * v); }

/// Means per (task, variant, split) over the rounded per-row percentages. An
/// instance with several split tags contributes to each of them.
inline std::vector<GroupMean> group_means(const std::vector<EvalReport>& reports)
{
  std::map<GroupKey, std::pair<int, std::map<std::string, double>>> acc;
  for (const auto& r : reports) {
    for (const auto& s : r.splits) {
      auto& [n, sums] = acc[{std::string(to_string(r.task)), r.variant, s}];
      ++n;
      for (const auto& m : metric_names(r.task)) sums[m] += percent(r.metrics.count(m) ? r.metrics.at(m) : 0.0);
    }
  }
  std::vector<GroupMean> out;
  for (const auto& [key, v] : acc) {
    GroupMean g;
    g.key = key;
    g.count = v.first;
    for (const auto& [m, sum] : v.second) g.means[m] = round_sig6(sum / v.first);
    out.push_back(std::move(g));
  }
  return out;
}

inline std::string csv_escape(const std::string& s)
{
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// One row per instance followed by one mean row per (task, variant, split).
/// Metric columns are the union over the tasks present, as percentages.
inline std::string aggregate_csv(std::vector<EvalReport> reports)
{
  std::sort(reports.begin(), reports.end(), [](const EvalReport& a, const EvalReport& b) { return a.instance_id < b.instance_id; });
  std::vector<std::string> cols;
  for (Task t : {Task::Maze, Task::Tangram}) {
    const bool present = std::any_of(reports.begin(), reports.end(), [&](const EvalReport& r) { return r.task == t; });
    if (!present) continue;
    for (const auto& m : metric_names(t)) cols.push_back(m);
  }
  std::ostringstream out;
  out << "row_type,instance_id,task,variant,split,count";
  for (const auto& c : cols) out << ',' << c;
  out << ",failure_tags,error\n";
  auto join = [](const std::vector<std::string>& v, char sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? std::string(1, sep) : "") + v[i];
    return s;
  };
  for (const auto& r : reports) {
    out << "instance," << csv_escape(r.instance_id) << ',' << to_string(r.task) << ',' << r.variant << ','
        << csv_escape(join(r.splits, ';')) << ",1";
    for (const auto& c : cols) {
      out << ',';
      if (r.metrics.count(c)) out << format_sig6(percent(r.metrics.at(c)));
    }
    out << ',' << csv_escape(join(r.failure_tags, ';')) << ',' << csv_escape(r.error) << '\n';
  }
  for (const auto& g : group_means(reports)) {
    out << "mean,," << std::get<0>(g.key) << ',' << std::get<1>(g.key) << ',' << std::get<2>(g.key) << ',' << g.count;
    for (const auto& c : cols) {
      out << ',';
      if (g.means.count(c)) out << format_sig6(g.means.at(c));
    }
    out << ",,\n";
  }
  return out.str();
}

/// Failure-tag histogram: each failed instance counts once, under its first tag.
inline std::map<std::string, int> tag_histogram(const std::vector<EvalReport>& reports)
{
  std::map<std::string, int> h;
  for (const auto& r : reports) {
    if (r.passed()) continue;
    std::string primary = r.failure_tags.empty() ? std::string(r.error.empty() ? "unspecified" : tag::kError)
                                                 : r.failure_tags.front();
    ++h[primary];
  }
  return h;
}

}  // namespace fpb
