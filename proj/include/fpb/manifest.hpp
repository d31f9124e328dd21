#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpb/error.hpp"
#include "fpb/icons.hpp"
#include "fpb/maze.hpp"
#include "fpb/prompt_text.hpp"
#include "fpb/schedule.hpp"
#include "fpb/tangram.hpp"
#include "fpb/tangram_gen.hpp"

namespace fpb {

constexpr int kSchemaVersion = 1;

enum class Task { Maze, Tangram };

constexpr std::string_view to_string(Task t) noexcept { return t == Task::Maze ? "maze" : "tangram"; }

inline Task task_from_string(std::string_view s)
{
  if (s == "maze") return Task::Maze;
  if (s == "tangram") return Task::Tangram;
  fail(ErrorCode::ParseError, "unknown task '" + std::string(s) + "'");
}

namespace split {
inline constexpr std::string_view kIid = "iid";
inline constexpr std::string_view kSpatial = "spatial_ood";
inline constexpr std::string_view kTemporal = "temporal_ood";
inline constexpr std::string_view kBoth = "both_ood";
inline constexpr std::string_view kUnseenIcon = "unseen_icon";
inline constexpr std::string_view kUnseenSilhouette = "unseen_silhouette";
}  // namespace split

constexpr int kMazeCanvasW = 832;
constexpr int kMazeCanvasH = 480;
constexpr int kSpatialOodMinSize = 7;
constexpr int kTemporalOodMinSteps = 13;

struct MazeBody {
  MazeSpec spec;
  ActionSeq actions;
  int canvas_w = kMazeCanvasW;
  int canvas_h = kMazeCanvasH;
};

struct InstanceManifest {
  Task task = Task::Maze;
  std::string instance_id;
  std::uint64_t seed = 0;
  std::string partition = "test";  // train or test
  std::variant<MazeBody, TangramScene> body;
  FrameSchedule schedule;  // maze only; tangram lengths live in the scene
  std::string prompt_text;
  std::vector<std::string> splits;  // sorted

  const MazeBody& maze() const
  {
    if (task != Task::Maze) fail(ErrorCode::TaskMismatch, instance_id + " is not a maze instance");
    return std::get<MazeBody>(body);
  }
  MazeBody& maze()
  {
    if (task != Task::Maze) fail(ErrorCode::TaskMismatch, instance_id + " is not a maze instance");
    return std::get<MazeBody>(body);
  }
  const TangramScene& tangram() const
  {
    if (task != Task::Tangram) fail(ErrorCode::TaskMismatch, instance_id + " is not a tangram instance");
    return std::get<TangramScene>(body);
  }
  bool has_split(std::string_view s) const { return std::find(splits.begin(), splits.end(), s) != splits.end(); }
};

/// Primary split tag of a maze instance from its grid size and path length.
inline std::string_view maze_tier_tag(int size, int steps) noexcept
{
  const bool spatial = size >= kSpatialOodMinSize, temporal = steps >= kTemporalOodMinSteps;
  if (spatial && temporal) return split::kBoth;
  if (spatial) return split::kSpatial;
  if (temporal) return split::kTemporal;
  return split::kIid;
}

// ---------------------------------------------------------------------------
// Number formatting

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v)
{
  if (v == 0.0) v = 0.0;  // drop the sign of negative zero
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s)
{
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    fail(ErrorCode::ParseError, "bad decimal string '" + std::string(s) + "'");
  }
  return v;
}

/// Decimal with six significant digits, as used in reports.
inline std::string format_sig6(double v)
{
  if (v == 0.0) v = 0.0;
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
  return std::string(buf, r.ptr);
}

// ---------------------------------------------------------------------------
// JSON encoding

namespace detail {

using nlohmann::json;

inline json enc(double v) { return format_double(v); }
inline double dec(const json& j) { return parse_double(j.get<std::string>()); }
inline json enc(Point2 p) { return json::array({enc(p.x), enc(p.y)}); }
inline Point2 dec_point(const json& j) { return {dec(j.at(0)), dec(j.at(1))}; }
inline json enc(const Polygon& p)
{
  json a = json::array();
  for (auto v : p.vertices) a.push_back(enc(v));
  return a;
}
inline Polygon dec_polygon(const json& j)
{
  Polygon p;
  for (const auto& v : j) p.vertices.push_back(dec_point(v));
  return p;
}
inline json enc(ColorRGB c) { return json::array({c.r, c.g, c.b}); }
inline ColorRGB dec_color(const json& j)
{
  auto ch = [&](int i) {
    const int v = j.at(i).get<int>();
    if (v < 0 || v > 255) fail(ErrorCode::ParseError, "colour channel out of range");
    return static_cast<std::uint8_t>(v);
  };
  return {ch(0), ch(1), ch(2)};
}
inline json enc(Cell c) { return json::array({c.r, c.c}); }
inline Cell dec_cell(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }
inline json enc(const Pose& p) { return {{"rotate_deg", enc(p.rotate_deg)}, {"translate", enc(p.translate)}, {"scale", enc(p.scale)}}; }
inline Pose dec_pose(const json& j) { return {dec(j.at("rotate_deg")), dec_point(j.at("translate")), dec(j.at("scale"))}; }

inline json maze_body_to_json(const MazeBody& b)
{
  const MazeSpec& m = b.spec;
  json walls = json::array();
  for (const auto& [a, c] : m.walls()) walls.push_back(json::array({a.r, a.c, c.r, c.c}));
  json acts = json::array();
  for (Action a : b.actions) acts.push_back(to_string(a));
  return {{"rows", m.rows},   {"cols", m.cols},     {"walls", walls},         {"start", enc(m.start)},
          {"goal", enc(m.goal)}, {"icon_id", m.icon_id}, {"maze_seed", m.seed}, {"actions", acts},
          {"canvas", json::array({b.canvas_w, b.canvas_h})}};
}

inline MazeBody maze_body_from_json(const json& j)
{
  MazeBody b;
  const int rows = j.at("rows").get<int>(), cols = j.at("cols").get<int>();
  if (rows < 2 || cols < 2 || rows > 64 || cols > 64) fail(ErrorCode::InvalidManifest, "grid size out of range");
  MazeSpec m = MazeSpec::closed(rows, cols);
  std::fill(m.wall_east.begin(), m.wall_east.end(), 0);
  std::fill(m.wall_south.begin(), m.wall_south.end(), 0);
  for (const auto& w : j.at("walls")) {
    const Cell a{w.at(0).get<int>(), w.at(1).get<int>()}, c{w.at(2).get<int>(), w.at(3).get<int>()};
    if (!m.in_bounds(a) || !m.in_bounds(c) || !adjacent(a, c)) {
      fail(ErrorCode::InvalidManifest, "wall pair is not grid-adjacent");
    }
    m.set_wall(a, c, true);
  }
  m.start = dec_cell(j.at("start"));
  m.goal = dec_cell(j.at("goal"));
  m.icon_id = j.at("icon_id").get<int>();
  m.seed = j.at("maze_seed").get<std::uint64_t>();
  b.spec = std::move(m);
  for (const auto& a : j.at("actions")) b.actions.push_back(action_from_string(a.get<std::string>()));
  b.canvas_w = j.at("canvas").at(0).get<int>();
  b.canvas_h = j.at("canvas").at(1).get<int>();
  return b;
}

inline json tangram_body_to_json(const TangramScene& s)
{
  json pieces = json::array();
  for (const auto& p : s.pieces) {
    pieces.push_back({{"piece_id", p.piece_id},
                      {"kind", to_string(p.kind)},
                      {"color", enc(p.color)},
                      {"target_pose", enc(p.target_pose)},
                      {"initial_pose", enc(p.initial_pose)},
                      {"target_polygon", enc(p.target_polygon)},
                      {"ref_area", p.ref_area},
                      {"ref_shape", to_string(p.ref_shape)}});
  }
  json windows = json::array();
  for (const auto& w : piece_windows(s.order, s.total_frames)) {
    windows.push_back({{"piece_id", w.piece_id}, {"first_frame", w.first_frame}, {"frame_count", w.frame_count}});
  }
  json layout = layout_to_json(s.layout);
  return {{"variant", to_string(s.variant)},
          {"layout", layout},
          {"pieces", pieces},
          {"canvas", json::array({s.canvas_w, s.canvas_h})},
          {"board_region", json::array({s.board.x0, s.board.y0, s.board.x1, s.board.y1})},
          {"board_scale", enc(s.board_scale)},
          {"sidebar_scale", enc(s.sidebar_scale)},
          {"order", s.order},
          {"total_frames", s.total_frames},
          {"windows", windows},
          {"scene_seed", s.seed},
          {"silhouette_area", s.silhouette.count()}};
}

inline TangramScene tangram_body_from_json(const json& j)
{
  TangramScene s;
  s.variant = tangram_variant_from_string(j.at("variant").get<std::string>());
  s.layout = layout_from_json(j.at("layout"));
  s.canvas_w = j.at("canvas").at(0).get<int>();
  s.canvas_h = j.at("canvas").at(1).get<int>();
  if (s.canvas_w != canvas_width(s.variant) || s.canvas_h != canvas_height(s.variant)) {
    fail(ErrorCode::InvalidManifest, "canvas does not match the variant");
  }
  const auto& br = j.at("board_region");
  s.board = {br.at(0).get<int>(), br.at(1).get<int>(), br.at(2).get<int>(), br.at(3).get<int>()};
  s.board_scale = dec(j.at("board_scale"));
  s.sidebar_scale = dec(j.at("sidebar_scale"));
  s.order = j.at("order").get<std::array<int, kPieceCount>>();
  s.total_frames = j.at("total_frames").get<int>();
  s.seed = j.at("scene_seed").get<std::uint64_t>();
  const auto& pieces = j.at("pieces");
  if (pieces.size() != kPieceCount) fail(ErrorCode::InvalidManifest, "tangram scene needs 7 pieces");
  for (const auto& pj : pieces) {
    const int id = pj.at("piece_id").get<int>();
    if (id < 0 || id >= kPieceCount) fail(ErrorCode::InvalidManifest, "piece_id out of range");
    PieceRecord& p = s.pieces[id];
    p.piece_id = id;
    p.kind = piece_kind_from_string(pj.at("kind").get<std::string>());
    p.canonical_poly = canonical_pieces()[id];
    p.color = dec_color(pj.at("color"));
    p.target_pose = dec_pose(pj.at("target_pose"));
    p.initial_pose = dec_pose(pj.at("initial_pose"));
    p.target_polygon = dec_polygon(pj.at("target_polygon"));
    p.ref_area = pj.at("ref_area").get<std::int64_t>();
    p.ref_shape = shape_class_from_string(pj.at("ref_shape").get<std::string>());
  }
  s.silhouette = rasterize_silhouette(s.pieces, s.canvas_w, s.canvas_h);
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Validation

inline void validate_manifest(const InstanceManifest& m)
{
  auto bad = [&](const std::string& why) { fail(ErrorCode::InvalidManifest, m.instance_id + ": " + why); };
  if (m.instance_id.empty()) bad("empty instance_id");
  if (!std::is_sorted(m.splits.begin(), m.splits.end())) bad("split tags must be sorted");
  if (m.task == Task::Maze) {
    const MazeBody& b = m.maze();
    try {
      validate_maze(b.spec, 2, 64);
      const auto cells = replay(b.spec, b.spec.start, b.actions);
      if (!(cells.back() == b.spec.goal)) bad("actions do not end at the goal");
      if (b.actions.size() != solve_shortest_path(b.spec).size()) bad("actions are not a shortest path");
      icon_spec(b.spec.icon_id);
      resolve_schedule(m.schedule, static_cast<int>(b.actions.size()));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::InvalidManifest) throw;
      bad(e.what());
    }
    if (b.canvas_w <= 0 || b.canvas_h <= 0) bad("canvas must be positive");
    const int size = std::max(b.spec.rows, b.spec.cols);
    const std::string_view tier = maze_tier_tag(size, static_cast<int>(b.actions.size()));
    for (std::string_view t : {split::kIid, split::kSpatial, split::kTemporal, split::kBoth}) {
      if (m.has_split(t) != (t == tier)) bad("split tags disagree with grid size and path length (expected " + std::string(tier) + ")");
    }
    const bool unseen = icon_spec(b.spec.icon_id).split == IconSplit::Unseen;
    if (m.has_split(split::kUnseenIcon) != unseen) bad("unseen_icon tag disagrees with icon_id");
    if (m.has_split(split::kUnseenSilhouette)) bad("unseen_silhouette tag on a maze instance");
  } else {
    const TangramScene& s = m.tangram();
    try {
      validate_layout(s.layout);
      piece_windows(s.order, s.total_frames);
    } catch (const Error& e) {
      bad(e.what());
    }
    std::array<int, kPieceCount> sorted = s.order;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < kPieceCount; ++i) {
      if (sorted[i] != i) bad("placement order is not a permutation of 0-6");
    }
    const BoardPlacement bp = board_placement(s.layout, s.variant);
    if (!(s.board == board_region(s.variant))) bad("board region does not match the variant");
    std::int64_t total = 0;
    for (int i = 0; i < kPieceCount; ++i) {
      const auto& p = s.pieces[i];
      if (p.kind != kPieceKinds[i]) bad("piece kind does not match piece id");
      if (p.ref_area <= 0) bad("ref_area must be positive");
      if (p.ref_shape != shape_of(p.kind)) bad("ref_shape does not match piece kind");
      const Polygon expect = normalize_winding(to_canvas(s.layout.pieces[i], bp));
      if (expect.size() != p.target_polygon.size()) bad("target polygon does not match layout");
      for (std::size_t k = 0; k < expect.size(); ++k) {
        if (distance(expect[k], p.target_polygon[k]) > 1e-6) bad("target polygon does not match layout");
      }
      for (int j = i + 1; j < kPieceCount; ++j) {
        if (color_distance(p.color, s.pieces[j].color) < 60) bad("piece colours are not distinct");
      }
      total += rasterize(p.target_polygon, s.canvas_w, s.canvas_h).count();
    }
    if (total != s.silhouette.count()) bad("target pieces overlap on the raster");
    for (std::string_view t : {split::kSpatial, split::kTemporal, split::kBoth, split::kUnseenIcon}) {
      if (m.has_split(t)) bad("maze split tag on a tangram instance");
    }
    if (m.has_split(split::kIid) == m.has_split(split::kUnseenSilhouette)) {
      bad("tangram instance needs exactly one of iid / unseen_silhouette");
    }
  }
}

// ---------------------------------------------------------------------------
// Serialisation

inline nlohmann::json manifest_to_json(const InstanceManifest& m)
{
  nlohmann::json j{{"schema_version", kSchemaVersion},
                   {"task", to_string(m.task)},
                   {"instance_id", m.instance_id},
                   {"seed", m.seed},
                   {"partition", m.partition},
                   {"prompt_text", m.prompt_text},
                   {"splits", m.splits}};
  if (m.task == Task::Maze) {
    j["maze"] = detail::maze_body_to_json(m.maze());
    j["schedule"] = {{"mode", to_string(m.schedule.mode)},
                     {"total_frames", m.schedule.total_frames},
                     {"kappa", m.schedule.kappa},
                     {"lead_hold", m.schedule.lead_hold},
                     {"tail_hold", m.schedule.tail_hold}};
  } else {
    j["tangram"] = detail::tangram_body_to_json(m.tangram());
  }
  return j;
}

inline std::string manifest_to_text(const InstanceManifest& m) { return manifest_to_json(m).dump(2) + "\n"; }

inline InstanceManifest manifest_from_json(const nlohmann::json& j)
{
  InstanceManifest m;
  try {
    if (!j.contains("schema_version")) fail(ErrorCode::VersionError, "manifest has no schema_version");
    const int version = j.at("schema_version").get<int>();
    if (version != kSchemaVersion) fail(ErrorCode::VersionError, "unsupported manifest schema_version " + std::to_string(version));
    m.task = task_from_string(j.at("task").get<std::string>());
    m.instance_id = j.at("instance_id").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.partition = j.at("partition").get<std::string>();
    m.prompt_text = j.at("prompt_text").get<std::string>();
    m.splits = j.at("splits").get<std::vector<std::string>>();
    if (m.task == Task::Maze) {
      m.body = detail::maze_body_from_json(j.at("maze"));
      const auto& s = j.at("schedule");
      m.schedule = {schedule_mode_from_string(s.at("mode").get<std::string>()), s.at("total_frames").get<int>(),
                    s.at("kappa").get<int>(), s.at("lead_hold").get<int>(), s.at("tail_hold").get<int>()};
    } else {
      m.body = detail::tangram_body_from_json(j.at("tangram"));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidManifest, std::string("manifest schema: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::VersionError || e.code() == ErrorCode::InvalidManifest) throw;
    fail(ErrorCode::InvalidManifest, e.what());
  }
  validate_manifest(m);
  return m;
}

inline void write_manifest(const InstanceManifest& m, const std::filesystem::path& path)
{
  write_text_file(path, manifest_to_text(m));
}

inline InstanceManifest read_manifest(const std::filesystem::path& path)
{
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::InvalidManifest, path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

inline std::string_view tangram_prompt(TangramVariant v) noexcept
{
  switch (v) {
    case TangramVariant::FadeIn: return prompts::tangram_fade_in;
    case TangramVariant::Rotation: return prompts::tangram_rotation;
    case TangramVariant::Translation: return prompts::tangram_translation;
  }
  return {};
}

/// Tangram instance for a layout. `unseen` marks layouts held out of training.
inline InstanceManifest make_tangram_manifest(std::string instance_id, const TangramLayout& layout, TangramVariant variant,
                                              std::uint64_t seed, bool unseen, std::string partition = "test",
                                              std::optional<int> total_frames = std::nullopt)
{
  InstanceManifest im;
  im.task = Task::Tangram;
  im.instance_id = std::move(instance_id);
  im.seed = seed;
  im.partition = std::move(partition);
  im.body = build_scene(layout, variant, seed, total_frames);
  im.prompt_text = std::string(tangram_prompt(variant));
  im.splits = {std::string(unseen ? split::kUnseenSilhouette : split::kIid)};
  return im;
}

}  // namespace fpb
