#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpb/error.hpp"
#include "fpb/frame_io.hpp"
#include "fpb/manifest.hpp"
#include "fpb/maze_gen.hpp"
#include "fpb/parallel.hpp"
#include "fpb/tangram.hpp"
#include "fpb/tangram_gen.hpp"

namespace fpb {

// On disk:
//   <dataset>/dataset.json                 summary
//   <dataset>/instances/<id>/manifest.json
//   <dataset>/instances/<id>/initial.png   first frame v0

/// One row of a maze tier table: `count` instances per grid size.
struct MazeTier {
  std::string name;
  std::string partition = "test";
  std::vector<int> sizes;
  PathRange path;
  int count = 0;
  IconSplit icons = IconSplit::Seen;
};

inline std::vector<MazeTier> maze_train_tiers() { return {{"train", "train", {3, 4, 5, 6}, {2, 12}, 1000, IconSplit::Seen}}; }

inline std::vector<MazeTier> maze_test_tiers()
{
  return {
      {"iid", "test", {3, 4, 5, 6}, {2, 12}, 250, IconSplit::Seen},
      {"spatial_ood", "test", {7, 8}, {2, 12}, 250, IconSplit::Seen},
      {"temporal_ood", "test", {5, 6}, {13, 18}, 250, IconSplit::Seen},
      {"both_ood", "test", {7, 8}, {13, 18}, 250, IconSplit::Seen},
  };
}

inline void validate_tier(const MazeTier& t)
{
  auto bad = [&](const std::string& why) { fail(ErrorCode::UsageError, "tier '" + t.name + "': " + why); };
  if (t.name.empty() || t.name.find_first_of("/\\ ") != std::string::npos) bad("name must be non-empty without spaces or slashes");
  if (t.partition != "train" && t.partition != "test") bad("partition must be train or test");
  if (t.sizes.empty()) bad("no grid sizes");
  for (int s : t.sizes) {
    if (s < 3 || s > 12) bad("grid size " + std::to_string(s) + " outside [3, 12]");
  }
  if (t.path.lo < 1 || t.path.hi < t.path.lo) bad("empty path range");
  if (t.count < 1) bad("count must be positive");
}

/// Tier file: {"tiers": [{"name", "partition", "sizes", "path": [lo, hi], "count", "icons"}]}.
/// Preset names "train", "test" and "all" are accepted in place of a file.
inline std::vector<MazeTier> parse_maze_tiers(const nlohmann::json& j)
{
  std::vector<MazeTier> out;
  try {
    for (const auto& t : j.at("tiers")) {
      MazeTier m;
      m.name = t.at("name").get<std::string>();
      m.partition = t.value("partition", std::string("test"));
      m.sizes = t.at("sizes").get<std::vector<int>>();
      m.path = {t.at("path").at(0).get<int>(), t.at("path").at(1).get<int>()};
      m.count = t.at("count").get<int>();
      const std::string icons = t.value("icons", std::string("seen"));
      if (icons != "seen" && icons != "unseen") fail(ErrorCode::UsageError, "tier '" + m.name + "': icons must be seen or unseen");
      m.icons = icons == "seen" ? IconSplit::Seen : IconSplit::Unseen;
      validate_tier(m);
      out.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::UsageError, std::string("tier config: ") + e.what());
  }
  if (out.empty()) fail(ErrorCode::UsageError, "tier config lists no tiers");
  return out;
}

inline std::vector<MazeTier> maze_tiers(const std::string& preset_or_file)
{
  if (preset_or_file == "train") return maze_train_tiers();
  if (preset_or_file == "test") return maze_test_tiers();
  if (preset_or_file == "all") {
    auto t = maze_train_tiers();
    for (auto& x : maze_test_tiers()) t.push_back(x);
    return t;
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(preset_or_file));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::UsageError, preset_or_file + ": " + e.what());
  }
  return parse_maze_tiers(j);
}

struct DatasetSummary {
  std::string task;
  std::uint64_t seed = 0;
  std::map<std::string, int> counts;  // "<partition>/<group>" -> instances
  std::vector<std::string> instance_ids;
};

inline nlohmann::json summary_to_json(const DatasetSummary& s)
{
  nlohmann::json c = nlohmann::json::object();
  for (const auto& [k, v] : s.counts) c[k] = v;
  return {{"schema_version", kSchemaVersion}, {"task", s.task}, {"seed", std::to_string(s.seed)},
          {"counts", c},                      {"total", s.instance_ids.size()}, {"instances", s.instance_ids}};
}

inline std::string format_summary(const DatasetSummary& s)
{
  std::ostringstream out;
  for (const auto& [k, v] : s.counts) out << "  " << k << ": " << v << '\n';
  out << "  total: " << s.instance_ids.size() << '\n';
  return out.str();
}

inline std::filesystem::path instance_dir(const std::filesystem::path& dataset, const std::string& id)
{
  return dataset / "instances" / id;
}

namespace detail {

inline std::string maze_key(const MazeSpec& m)
{
  std::string k = std::to_string(m.rows) + "x" + std::to_string(m.cols) + ":";
  for (auto w : m.wall_east) k += static_cast<char>('0' + w);
  k += '|';
  for (auto w : m.wall_south) k += static_cast<char>('0' + w);
  k += ':' + std::to_string(m.start.r) + ',' + std::to_string(m.start.c) + ':' + std::to_string(m.goal.r) + ',' +
       std::to_string(m.goal.c);
  return k;
}

inline std::string pad4(int i)
{
  std::string s = std::to_string(i);
  return std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

inline void write_instances(const std::vector<InstanceManifest>& ims, const std::filesystem::path& out, int workers,
                            bool initial_frames)
{
  parallel_for(ims.size(), workers, [&](std::size_t i) {
    const auto dir = instance_dir(out, ims[i].instance_id);
    write_manifest(ims[i], dir / "manifest.json");
    if (!initial_frames) return;
    Frame f0;
    if (ims[i].task == Task::Maze) {
      f0 = initial_frame(ims[i]);
    } else {
      const TangramScene& s = ims[i].tangram();
      f0 = render_tangram_frame(s, piece_windows(s.order, s.total_frames), 0);
    }
    write_png(f0, dir / "initial.png");
  });
}

}  // namespace detail

/// Samples every tier. (maze, start, goal) triples are unique across the
/// whole dataset; a collision redraws with the next attempt index.
inline std::vector<InstanceManifest> sample_maze_dataset(const std::vector<MazeTier>& tiers, std::uint64_t seed)
{
  std::vector<InstanceManifest> out;
  std::set<std::string> seen_ids, seen_keys;
  for (const auto& t : tiers) {
    validate_tier(t);
    for (int size : t.sizes) {
      const std::string config = t.name + "/" + std::to_string(size);
      for (int i = 0; i < t.count; ++i) {
        const std::string id = "maze_" + t.partition + "_" + t.name + "_" + std::to_string(size) + "x" + std::to_string(size) +
                               "_" + detail::pad4(i);
        if (!seen_ids.insert(id).second) fail(ErrorCode::UsageError, "duplicate instance id " + id + " (repeated tier name?)");
        for (std::uint64_t attempt = 0;; ++attempt) {
          if (attempt > 1000) {
            fail(ErrorCode::InfeasibleRange, "tier '" + t.name + "' size " + std::to_string(size) + ": cannot draw " +
                                                 std::to_string(t.count) + " distinct instances");
          }
          const std::uint64_t s = derive_seed(seed, config, static_cast<std::uint64_t>(i) + attempt * 1000003ULL);
          InstanceManifest im;
          try {
            im = sample_instance(size, size, t.path, t.icons, s, id);
          } catch (const Error& e) {
            fail(e.code(), "tier '" + t.name + "' size " + std::to_string(size) + ": " + e.what());
          }
          if (!seen_keys.insert(detail::maze_key(im.maze().spec)).second) continue;
          im.partition = t.partition;
          out.push_back(std::move(im));
          break;
        }
      }
    }
  }
  return out;
}

inline DatasetSummary summarize(const std::vector<InstanceManifest>& ims, std::string task, std::uint64_t seed)
{
  DatasetSummary s;
  s.task = std::move(task);
  s.seed = seed;
  for (const auto& im : ims) {
    s.instance_ids.push_back(im.instance_id);
    for (const auto& sp : im.splits) ++s.counts[im.partition + "/" + sp];
  }
  std::sort(s.instance_ids.begin(), s.instance_ids.end());
  return s;
}

inline DatasetSummary write_dataset(const std::vector<InstanceManifest>& ims, const std::filesystem::path& out, std::string task,
                                    std::uint64_t seed, int workers, bool initial_frames = true)
{
  detail::write_instances(ims, out, workers, initial_frames);
  DatasetSummary s = summarize(ims, std::move(task), seed);
  write_text_file(out / "dataset.json", summary_to_json(s).dump(2) + "\n");
  return s;
}

inline DatasetSummary generate_maze_dataset(const std::vector<MazeTier>& tiers, std::uint64_t seed, const std::filesystem::path& out,
                                            int workers, bool initial_frames = true)
{
  return write_dataset(sample_maze_dataset(tiers, seed), out, "maze", seed, workers, initial_frames);
}

/// Tangram instances for every layout in the training and held-out
/// directories, once per variant. The two directories may not share a
/// silhouette.
inline std::vector<InstanceManifest> tangram_dataset_manifests(const std::vector<TangramLayout>& train,
                                                               const std::vector<TangramLayout>& test,
                                                               const std::vector<TangramVariant>& variants, std::uint64_t seed,
                                                               int workers)
{
  std::map<std::string, std::string> train_keys;
  for (const auto& l : train) train_keys[silhouette_key(l)] = l.name;
  for (const auto& l : test) {
    const auto it = train_keys.find(silhouette_key(l));
    if (it != train_keys.end()) {
      fail(ErrorCode::InvalidLayout, "held-out layout '" + l.name + "' repeats training silhouette '" + it->second + "'");
    }
  }
  struct Job {
    const TangramLayout* layout;
    TangramVariant variant;
    bool held_out;
  };
  std::vector<Job> jobs;
  std::set<std::string> names;
  for (const auto* set : {&train, &test}) {
    names.clear();
    for (const auto& l : *set) {
      if (!names.insert(l.name).second) fail(ErrorCode::InvalidLayout, "duplicate layout name '" + l.name + "'");
      if (l.name.empty() || l.name.find_first_of("/\\ ") != std::string::npos) {
        fail(ErrorCode::InvalidLayout, "layout name '" + l.name + "' is not usable in an instance id");
      }
      for (TangramVariant v : variants) jobs.push_back({&l, v, set == &test});
    }
  }
  std::vector<InstanceManifest> out(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    const Job& j = jobs[i];
    const std::string partition = j.held_out ? "test" : "train";
    const std::string id = "tangram_" + partition + "_" + j.layout->name + "_" + std::string(to_string(j.variant));
    out[i] = make_tangram_manifest(id, *j.layout, j.variant, derive_seed(seed, id), j.held_out, partition);
  });
  return out;
}

inline DatasetSummary generate_tangram_dataset(const std::filesystem::path& train_dir, const std::filesystem::path& test_dir,
                                               const std::vector<TangramVariant>& variants, std::uint64_t seed,
                                               const std::filesystem::path& out, int workers, bool initial_frames = true)
{
  const auto train = train_dir.empty() ? std::vector<TangramLayout>{} : load_layout_dir(train_dir);
  const auto test = test_dir.empty() ? std::vector<TangramLayout>{} : load_layout_dir(test_dir);
  if (train.empty() && test.empty()) fail(ErrorCode::UsageError, "no tangram layouts given");
  auto ims = tangram_dataset_manifests(train, test, variants, seed, workers);
  DatasetSummary s = write_dataset(ims, out, "tangram", seed, workers, initial_frames);
  s.counts["layouts/train"] = static_cast<int>(train.size());
  s.counts["layouts/test"] = static_cast<int>(test.size());
  write_text_file(out / "dataset.json", summary_to_json(s).dump(2) + "\n");
  return s;
}

/// All manifests of a dataset, sorted by instance id.
inline std::vector<InstanceManifest> load_dataset(const std::filesystem::path& dataset, int workers = 1)
{
  const auto root = dataset / "instances";
  if (!std::filesystem::is_directory(root)) fail(ErrorCode::IoError, "no instances directory in " + dataset.string());
  std::vector<std::filesystem::path> paths;
  for (const auto& e : std::filesystem::directory_iterator(root)) {
    if (std::filesystem::exists(e.path() / "manifest.json")) paths.push_back(e.path() / "manifest.json");
  }
  std::sort(paths.begin(), paths.end());
  std::vector<InstanceManifest> out(paths.size());
  parallel_for(paths.size(), workers, [&](std::size_t i) { out[i] = read_manifest(paths[i]); });
  return out;
}

}  // namespace fpb
