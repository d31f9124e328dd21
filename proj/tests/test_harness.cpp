#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "fpb/fpb.hpp"

using namespace fpb;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
  const fs::path p = fs::temp_directory_path() / ("fpb_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ErrorCode code_of(const std::function<void()>& fn)
{
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

std::vector<MazeTier> small_tiers(int count)
{
  auto t = maze_test_tiers();
  for (auto& x : t) x.count = count;
  return t;
}

std::vector<InstanceManifest> small_maze_set()
{
  return sample_maze_dataset({{"iid", "test", {3, 5}, {2, 12}, 2, IconSplit::Seen},
                              {"both_ood", "test", {7}, {13, 18}, 2, IconSplit::Seen}},
                             11);
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

}  // namespace

// ---------------------------------------------------------------------------
// config

TEST(Config, OverridesDocumentedKeys)
{
  const HarnessConfig c = parse_config(
      "# evaluator\n"
      "eval.maze.tau = 12\n"
      "eval.maze.min_area=9\n"
      "eval.maze.continuity_radius = 2.5\n"
      "eval.maze.resample_per_step = 7\n"
      "\n"
      "eval.tangram.delta_col = 45\n"
      "eval.tangram.area_window = 0.5, 1.5\n"
      "eval.tangram.angle_window = 10\n"
      "eval.tangram.k_samples = 8\n"
      "synth.maze.total_frames = 101\n");
  EXPECT_EQ(c.maze.tau, 12);
  EXPECT_EQ(c.maze.min_area, 9);
  EXPECT_DOUBLE_EQ(c.maze.continuity_radius, 2.5);
  EXPECT_EQ(c.maze.resample_per_step, 7);
  EXPECT_DOUBLE_EQ(c.tangram.delta_col, 45);
  EXPECT_DOUBLE_EQ(c.tangram.area_lo, 0.5);
  EXPECT_DOUBLE_EQ(c.tangram.area_hi, 1.5);
  EXPECT_DOUBLE_EQ(c.tangram.shape_rules.angle_tolerance, 10);
  EXPECT_EQ(c.tangram.k_samples, 8);
  EXPECT_EQ(c.maze_total_frames, 101);

  const HarnessConfig d = parse_config("");
  EXPECT_EQ(d.maze.tau, MazeEvalParams{}.tau);
  EXPECT_DOUBLE_EQ(d.tangram.area_lo, 0.6);
}

TEST(Config, RejectsUnknownKeysAndBadValues)
{
  EXPECT_EQ(code_of([] { parse_config("eval.maze.tua = 3\n"); }), ErrorCode::UsageError);
  EXPECT_EQ(code_of([] { parse_config("eval.maze.tau = lots\n"); }), ErrorCode::UsageError);
  EXPECT_EQ(code_of([] { parse_config("eval.maze.tau\n"); }), ErrorCode::UsageError);
  EXPECT_EQ(code_of([] { parse_config("eval.tangram.area_window = 1.4,0.6\n"); }), ErrorCode::UsageError);
  EXPECT_EQ(code_of([] { parse_config("eval.tangram.vc_mode = sometimes\n"); }), ErrorCode::UsageError);
}

TEST(Config, ScheduleOverrides)
{
  const InstanceManifest im = sample_instance(8, 8, {18, 18}, IconSplit::Seen, 5);
  EXPECT_EQ(synthesis_length(im, {}), 81);
  HarnessConfig c = parse_config("synth.maze.mode = per_step\nsynth.maze.kappa = 11\nsynth.maze.lead_hold = 0\n");
  const FrameSchedule s = synthesis_schedule(im, c);
  EXPECT_EQ(s.total_frames, 198);
  EXPECT_EQ(s.tail_hold, 0);
  c = parse_config("synth.maze.total_frames = 121\n");
  EXPECT_EQ(synthesize_golden(im, c).size(), 121u);
}

// ---------------------------------------------------------------------------
// workers

TEST(Parallel, WorkerResolution)
{
  ::unsetenv("FPB_WORKERS");
  EXPECT_EQ(resolve_workers(3), 3);
  EXPECT_GE(resolve_workers(0), 1);
  ::setenv("FPB_WORKERS", "5", 1);
  EXPECT_EQ(resolve_workers(0), 5);
  EXPECT_EQ(resolve_workers(2), 2);
  ::setenv("FPB_WORKERS", "zero", 1);
  EXPECT_EQ(code_of([] { resolve_workers(0); }), ErrorCode::UsageError);
  ::unsetenv("FPB_WORKERS");
}

TEST(Parallel, EveryIndexOnceAndErrorsRethrown)
{
  for (int w : {1, 2, 8}) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), w, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  EXPECT_EQ(code_of([] {
              parallel_for(50, 4, [](std::size_t i) {
                if (i == 17) fail(ErrorCode::IoError, "boom");
              });
            }),
            ErrorCode::IoError);
}

// ---------------------------------------------------------------------------
// dataset

TEST(Dataset, DefaultTierTablesMatchPublishedCounts)
{
  int train = 0, test = 0, configs = 0;
  for (const auto& t : maze_train_tiers()) train += t.count * static_cast<int>(t.sizes.size());
  for (const auto& t : maze_test_tiers()) {
    test += t.count * static_cast<int>(t.sizes.size());
    configs += static_cast<int>(t.sizes.size());
  }
  EXPECT_EQ(train, 4000);
  EXPECT_EQ(test, 2500);
  EXPECT_EQ(configs, 10);
}

TEST(Dataset, TierStructureAndUniqueness)
{
  const auto ims = sample_maze_dataset(small_tiers(6), 3);
  ASSERT_EQ(ims.size(), 60u);
  std::map<std::string, int> per_config;
  std::set<std::string> ids;
  for (const auto& im : ims) {
    const MazeSpec& m = im.maze().spec;
    const int steps = static_cast<int>(im.maze().actions.size());
    const std::string tier = im.splits.front();
    ++per_config[tier + "/" + std::to_string(m.rows)];
    EXPECT_TRUE(ids.insert(im.instance_id).second);
    const bool spatial = tier == "spatial_ood" || tier == "both_ood";
    const bool temporal = tier == "temporal_ood" || tier == "both_ood";
    EXPECT_EQ(m.rows >= 7, spatial) << im.instance_id;
    if (temporal) {
      EXPECT_GE(steps, 13);
      EXPECT_LE(steps, 18);
    } else {
      EXPECT_GE(steps, 2);
      EXPECT_LE(steps, 12);
    }
  }
  EXPECT_EQ(per_config.size(), 10u);
  for (const auto& [k, n] : per_config) EXPECT_EQ(n, 6) << k;
}

TEST(Dataset, InfeasibleTierNamed)
{
  try {
    sample_maze_dataset({{"too_long", "test", {3}, {13, 18}, 1, IconSplit::Seen}}, 1);
    FAIL() << "expected InfeasibleRange";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfeasibleRange);
    EXPECT_NE(std::string(e.what()).find("too_long"), std::string::npos);
  }
  EXPECT_EQ(code_of([] { validate_tier({"x", "test", {2}, {2, 4}, 1, IconSplit::Seen}); }), ErrorCode::UsageError);
  EXPECT_EQ(code_of([] { parse_maze_tiers(nlohmann::json::parse(R"({"tiers":[{"name":"a"}]})")); }), ErrorCode::UsageError);
}

TEST(Dataset, SameSeedByteIdentical)
{
  const auto a = scratch("det_a"), b = scratch("det_b");
  generate_maze_dataset(small_tiers(1), 9, a, 4);
  generate_maze_dataset(small_tiers(1), 9, b, 1);
  const auto ims = load_dataset(a);
  ASSERT_EQ(ims.size(), 10u);
  for (const auto& im : ims) {
    for (const char* f : {"manifest.json", "initial.png"}) {
      EXPECT_EQ(slurp(instance_dir(a, im.instance_id) / f), slurp(instance_dir(b, im.instance_id) / f)) << im.instance_id << f;
    }
    EXPECT_EQ(read_png(instance_dir(a, im.instance_id) / "initial.png"), initial_frame(im));
  }
  EXPECT_EQ(slurp(a / "dataset.json"), slurp(b / "dataset.json"));
}

TEST(Dataset, TangramLayoutDirectories)
{
  const auto dir = scratch("tangram_ds");
  std::set<std::string> taken;
  const auto train = generate_layout_set(1, 4, taken, "tr");
  const auto test = generate_layout_set(2, 2, taken, "te");
  for (const auto& l : train) write_layout_file(l, dir / "train" / (l.name + ".json"));
  for (const auto& l : test) write_layout_file(l, dir / "test" / (l.name + ".json"));
  const DatasetSummary s = generate_tangram_dataset(dir / "train", dir / "test",
                                                    {kTangramVariants.begin(), kTangramVariants.end()}, 4, dir / "out", 4);
  EXPECT_EQ(s.instance_ids.size(), 18u);
  EXPECT_EQ(s.counts.at("train/iid"), 12);
  EXPECT_EQ(s.counts.at("test/unseen_silhouette"), 6);
  EXPECT_EQ(s.counts.at("layouts/train"), 4);
  EXPECT_EQ(s.counts.at("layouts/test"), 2);

  // A held-out silhouette that repeats a training one is rejected.
  write_layout_file(train[0], dir / "test" / "dup.json");
  EXPECT_EQ(code_of([&] {
              generate_tangram_dataset(dir / "train", dir / "test", {TangramVariant::FadeIn}, 4, dir / "out2", 1);
            }),
            ErrorCode::InvalidLayout);
}

// ---------------------------------------------------------------------------
// synthesize / evaluate

TEST(Synthesize, SkipsCompleteRefusesPartial)
{
  const auto dir = scratch("synth");
  const auto ims = small_maze_set();
  HarnessConfig cfg;
  auto st = synthesize_dataset(ims, dir, cfg, 4, false);
  EXPECT_EQ(st.written, 6);
  for (const auto& im : ims) EXPECT_EQ(list_frame_files(dir / im.instance_id).size(), 81u);
  st = synthesize_dataset(ims, dir, cfg, 4, false);
  EXPECT_EQ(st.written, 0);
  EXPECT_EQ(st.skipped, 6);

  fs::remove(dir / ims[2].instance_id / frame_file_name(40));
  try {
    synthesize_dataset(ims, dir, cfg, 4, false);
    FAIL() << "expected refusal";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UsageError);
    EXPECT_NE(std::string(e.what()).find(ims[2].instance_id), std::string::npos);
  }
  st = synthesize_dataset(ims, dir, cfg, 4, true);
  EXPECT_EQ(st.written, 6);
  EXPECT_EQ(output_state(dir / ims[2].instance_id, 81), OutputState::Complete);
}

TEST(Evaluate, GoldenMissingAndCorrupt)
{
  const auto dir = scratch("evaluate");
  const auto ims = small_maze_set();
  synthesize_dataset(ims, dir / "golden", {}, 4, false);

  const auto golden = evaluate_dataset(ims, dir / "golden", {}, 4);
  for (const auto& r : golden) {
    EXPECT_TRUE(r.passed()) << r.instance_id;
    EXPECT_EQ(r.metrics.at("pr"), 1.0);
  }

  fs::create_directories(dir / "empty");
  const auto missing = evaluate_dataset(ims, dir / "empty", {}, 4);
  for (const auto& r : missing) {
    EXPECT_EQ(r.failure_tags, std::vector<std::string>{"missing"});
    EXPECT_EQ(r.metrics.at("em"), 0.0);
  }
  for (const auto& g : group_means(missing)) EXPECT_EQ(g.means.at("pr"), 0.0);

  fs::copy(dir / "golden", dir / "mixed", fs::copy_options::recursive);
  write_text_file(dir / "mixed" / ims[1].instance_id / frame_file_name(3), "garbage");
  const auto mixed = evaluate_dataset(ims, dir / "mixed", {}, 4);
  for (std::size_t i = 0; i < ims.size(); ++i) {
    if (i == 1) {
      EXPECT_FALSE(mixed[i].error.empty());
      EXPECT_FALSE(mixed[i].passed());
    } else {
      EXPECT_TRUE(mixed[i].passed());
    }
  }
  write_reports(mixed, dir / "reports");
  EXPECT_EQ(load_reports(dir / "reports").size(), ims.size());
}

TEST(Evaluate, WorkerCountIndependent)
{
  const auto dir = scratch("workers");
  const auto ims = small_maze_set();
  synthesize_dataset(ims, dir / "golden", {}, 3, false);
  perturb_dataset(ims, dir / "golden", {PerturbMode::Teleport}, dir / "tele", 3);
  EXPECT_EQ(aggregate_csv(evaluate_dataset(ims, dir / "tele", {}, 1)), aggregate_csv(evaluate_dataset(ims, dir / "tele", {}, 8)));
}

// ---------------------------------------------------------------------------
// perturb

TEST(Perturb, MazeModes)
{
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const InstanceManifest im = sample_instance(6, 6, {8, 12}, IconSplit::Seen, 100 + seed);
    const auto gold = synthesize_solution_video(im);
    const double L = static_cast<double>(im.maze().actions.size());

    PerturbSpec wc{PerturbMode::WallCross};
    const auto w = perturb_instance(im, gold, wc);
    const EvalReport rw = evaluate_maze(im, w.frames);
    EXPECT_EQ(rw.metrics.at("em"), 0.0);
    EXPECT_NEAR(rw.metrics.at("pr"), w.details.at("step").get<int>() / L, 1.0 / L + 1e-9);
    EXPECT_NE(std::find(rw.failure_tags.begin(), rw.failure_tags.end(), tag::kBoundaryViolation), rw.failure_tags.end());
    EXPECT_TRUE(w.details.contains("wall"));

    const EvalReport rt = evaluate_maze(im, perturb_instance(im, gold, {PerturbMode::Teleport}).frames);
    EXPECT_EQ(rt.metrics.at("em"), 0.0);
    EXPECT_LE(rt.metrics.at("pr"), 0.5 + 1.0 / L + 1e-9);
    EXPECT_NE(std::find(rt.failure_tags.begin(), rt.failure_tags.end(), tag::kKinematic), rt.failure_tags.end());

    const EvalReport rf = evaluate_maze(im, perturb_instance(im, gold, {PerturbMode::Freeze}).frames);
    EXPECT_EQ(rf.metrics.at("em"), 0.0);
    EXPECT_LE(rf.metrics.at("pr"), 0.5 + 1.0 / L + 1e-9);

    const EvalReport rr = evaluate_maze(im, perturb_instance(im, gold, {PerturbMode::WrongTurn}).frames);
    EXPECT_EQ(rr.metrics.at("em"), 0.0);
    EXPECT_LT(rr.metrics.at("pr"), 1.0);
  }
}

TEST(Perturb, InapplicableAndOutOfRange)
{
  const InstanceManifest maze = sample_instance(4, 4, {3, 8}, IconSplit::Seen, 1);
  const auto gold = synthesize_solution_video(maze);
  for (PerturbMode m : {PerturbMode::ShapeDistort, PerturbMode::ColorDrift, PerturbMode::PieceVanish}) {
    EXPECT_EQ(code_of([&] { perturb_instance(maze, gold, {m}); }), ErrorCode::UsageError);
  }
  const InstanceManifest tg = make_tangram_manifest("t", square_layout(), TangramVariant::Translation, 2, false);
  const auto tgold = synthesize_assembly_video(tg.tangram());
  for (PerturbMode m : {PerturbMode::WallCross, PerturbMode::Teleport}) {
    EXPECT_EQ(code_of([&] { perturb_instance(tg, tgold, {m}); }), ErrorCode::UsageError);
  }
  PerturbSpec big{PerturbMode::ShapeDistort, 4.0};
  EXPECT_EQ(code_of([&] { perturb_instance(tg, tgold, big); }), ErrorCode::UsageError);
  EXPECT_EQ(code_of([] { perturb_mode_from_string("melt"); }), ErrorCode::UsageError);
  EXPECT_EQ(StepRef::parse("0.25").fraction, true);
  EXPECT_EQ(StepRef::parse("3").fraction, false);
}

TEST(Perturb, Deterministic)
{
  const InstanceManifest tg = make_tangram_manifest("t", generate_layout(8), TangramVariant::Rotation, 3, false);
  const auto gold = synthesize_assembly_video(tg.tangram());
  for (PerturbMode m : {PerturbMode::ColorDrift, PerturbMode::ShapeDistort}) {
    const auto a = perturb_instance(tg, gold, {m});
    const auto b = perturb_instance(tg, gold, {m});
    EXPECT_EQ(a.frames, b.frames);
    EXPECT_EQ(a.details, b.details);
  }
}

TEST(Perturb, HueShift)
{
  EXPECT_EQ(shift_hue({255, 0, 0}, 1.0 / 3), (ColorRGB{0, 255, 0}));
  EXPECT_EQ(shift_hue({0, 0, 255}, 0.5), (ColorRGB{255, 255, 0}));
  EXPECT_EQ(from_hsv(to_hsv({12, 200, 77})), (ColorRGB{12, 200, 77}));
}

TEST(Perturb, EveryTaxonomyTagProducible)
{
  std::set<std::string> seen;
  const InstanceManifest maze = sample_instance(6, 6, {8, 12}, IconSplit::Seen, 4);
  const auto mg = synthesize_solution_video(maze);
  for (PerturbMode m : kPerturbModes) {
    if (!applies_to(m, Task::Maze)) continue;
    for (const auto& t : evaluate_maze(maze, perturb_instance(maze, mg, {m}).frames).failure_tags) seen.insert(t);
  }
  for (int k = 0; k < 3; ++k) {
    const InstanceManifest tg = make_tangram_manifest("t", generate_layout(30 + k), kTangramVariants[k], 5 + k, false);
    const auto g = synthesize_assembly_video(tg.tangram());
    for (PerturbMode m : kPerturbModes) {
      if (!applies_to(m, Task::Tangram)) continue;
      for (const auto& t : evaluate_tangram(tg, perturb_instance(tg, g, {m}).frames, {}, &g).failure_tags) seen.insert(t);
    }
  }
  for (auto t : {tag::kBoundaryViolation, tag::kKinematic, tag::kStructural, tag::kChromatic, tag::kCentroid, tag::kAngular}) {
    EXPECT_TRUE(seen.count(std::string(t))) << t;
  }
}

TEST(Perturb, PieceVanishLowersConsistency)
{
  for (int k = 0; k < 3; ++k) {
    const InstanceManifest tg = make_tangram_manifest("t", generate_layout(50 + k), kTangramVariants[k], 9, false);
    const auto g = synthesize_assembly_video(tg.tangram());
    PerturbSpec spec{PerturbMode::PieceVanish, 0.5};
    const auto r = evaluate_tangram(tg, perturb_instance(tg, g, spec).frames, {}, &g);
    EXPECT_LE(r.metrics.at("visual_consistency"), 1.0 - 0.5 / 7 + 0.02) << to_string(kTangramVariants[k]);
    EXPECT_EQ(r.metrics.at("strict_gc"), 0.0);
  }
}

// ---------------------------------------------------------------------------
// sweep

TEST(Sweep, KappaArithmeticOnEighteenSteps)
{
  const InstanceManifest im = sample_instance(8, 8, {18, 18}, IconSplit::Seen, 77, "long");
  ASSERT_EQ(im.maze().actions.size(), 18u);
  SweepConfig sc;
  sc.axis = SweepAxis::Kappa;
  sc.values = {5, 7, 9, 11};
  sc.splits = {std::string(im.splits.front())};
  sc.instances_per_cell = 1;
  sc.lead_hold = 0;
  const auto cells = run_sweep(sc, {im}, {}, 2);
  ASSERT_EQ(cells.size(), 4u);
  const int expected[] = {90, 126, 162, 198};
  for (int i = 0; i < 4; ++i) {
    EXPECT_TRUE(cells[i].valid);
    EXPECT_EQ(cells[i].motion_min, expected[i]);
    EXPECT_EQ(cells[i].total_min, expected[i]);
    EXPECT_EQ(cells[i].means.at("em"), 100.0);
  }
}

TEST(Sweep, FrameBudgetsCellsAndInvalidCell)
{
  const auto ims = small_maze_set();
  SweepConfig sc;
  sc.values = {61, 81, 101, 121, 141};
  sc.splits = {"iid", "both_ood"};
  sc.instances_per_cell = 3;
  auto cells = run_sweep(sc, ims, {}, 4);
  EXPECT_EQ(cells.size(), 10u);
  for (const auto& c : cells) {
    EXPECT_TRUE(c.valid);
    EXPECT_EQ(c.total_min, c.value);
    EXPECT_EQ(c.means.at("em"), 100.0);
    EXPECT_EQ(c.means.at("pr"), 100.0);
  }
  const std::string svg = sweep_svg(sc, cells);
  std::size_t polylines = 0;
  for (std::size_t p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++polylines;
  EXPECT_EQ(polylines, 2u);

  // 16 frames cannot hold 13+ steps after a 4-frame lead.
  sc.values = {16, 81};
  sc.splits = {"both_ood"};
  cells = run_sweep(sc, ims, {}, 2);
  ASSERT_EQ(cells.size(), 2u);
  EXPECT_FALSE(cells[0].valid);
  EXPECT_NE(cells[0].note.find("ScheduleError"), std::string::npos);
  EXPECT_TRUE(cells[1].valid);
  EXPECT_NE(sweep_csv(sc, cells).find("total_frames,16,both_ood,2,0,0"), std::string::npos);
}

// ---------------------------------------------------------------------------
// report

TEST(Report, JsonCsvSvgAgree)
{
  std::vector<EvalReport> reports;
  Rng rng(4);
  for (int i = 0; i < 30; ++i) {
    EvalReport r;
    r.instance_id = "r" + std::to_string(i);
    r.task = Task::Maze;
    r.splits = {i % 3 == 0 ? "iid" : (i % 3 == 1 ? "spatial_ood" : "both_ood")};
    const double pr = rng.uniform01();
    const bool em = pr > 0.7;
    r.metrics = {{"em", em ? 1.0 : 0.0}, {"pr", em ? 1.0 : pr}};
    if (!em) r.add_tag(i % 2 ? tag::kPathDeviation : tag::kBoundaryViolation);
    reports.push_back(r);
  }
  const ReportBundle b = build_report(reports);
  std::size_t polylines = 0;
  for (std::size_t p = b.svg.find("<polyline"); p != std::string::npos; p = b.svg.find("<polyline", p + 1)) ++polylines;
  EXPECT_EQ(polylines, 3u);

  int hist = 0, failed = 0;
  for (const auto& [k, v] : b.json.at("tag_histogram").items()) hist += v.get<int>();
  for (const auto& r : reports) failed += !r.passed();
  EXPECT_EQ(hist, failed);
  EXPECT_EQ(b.json.at("failed").get<int>(), failed);

  for (const auto& g : b.json.at("groups")) {
    const std::string row = "mean,,maze,," + g.at("split").get<std::string>() + "," + std::to_string(g.at("count").get<int>()) +
                            "," + g.at("means").at("em").get<std::string>() + "," + g.at("means").at("pr").get<std::string>() +
                            ",,";
    EXPECT_NE(b.csv.find(row), std::string::npos) << row;
  }
  EXPECT_EQ(code_of([] { build_report({}); }), ErrorCode::UsageError);
}
