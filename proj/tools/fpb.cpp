#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fpb/fpb.hpp"

using namespace fpb;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_list(const std::string& s)
{
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> int_list(const std::string& s)
{
  std::vector<int> out;
  for (const auto& x : split_list(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(x, &used));
      if (used != x.size()) throw std::invalid_argument(x);
    } catch (const std::exception&) {
      fail(ErrorCode::UsageError, "not an integer: '" + x + "'");
    }
  }
  return out;
}

struct Globals {
  std::uint64_t seed = 0;
  int workers = 0;
  std::string config;

  HarnessConfig harness() const { return config.empty() ? HarnessConfig{} : load_config(config); }
  int pool() const { return resolve_workers(workers); }
};

int run_generate(const Globals& g, const std::string& task, const std::string& tiers, const std::string& train_layouts,
                 const std::string& test_layouts, const std::string& variants, const std::string& out, bool no_frames)
{
  DatasetSummary s;
  if (task == "maze") {
    s = generate_maze_dataset(maze_tiers(tiers), g.seed, out, g.pool(), !no_frames);
  } else if (task == "tangram") {
    std::vector<TangramVariant> vs;
    for (const auto& v : split_list(variants)) vs.push_back(tangram_variant_from_string(v));
    if (vs.empty()) fail(ErrorCode::UsageError, "no tangram variants");
    s = generate_tangram_dataset(train_layouts, test_layouts, vs, g.seed, out, g.pool(), !no_frames);
  } else {
    fail(ErrorCode::UsageError, "task must be maze or tangram");
  }
  std::cout << "wrote " << s.instance_ids.size() << " " << task << " instances to " << out << "\n" << format_summary(s);
  return 0;
}

int run_synthesize(const Globals& g, const std::string& dataset, std::string out, bool force)
{
  if (out.empty()) out = (fs::path(dataset) / "golden").string();
  const auto ims = load_dataset(dataset, g.pool());
  const auto st = synthesize_dataset(ims, out, g.harness(), g.pool(), force);
  std::cout << "synthesized " << st.written << ", skipped " << st.skipped << " complete, in " << out << "\n";
  return 0;
}

int run_evaluate(const Globals& g, const std::string& candidates, const std::string& dataset, const std::string& out,
                 std::string golden)
{
  if (golden.empty() && fs::is_directory(fs::path(dataset) / "golden")) golden = (fs::path(dataset) / "golden").string();
  const auto ims = load_dataset(dataset, g.pool());
  const auto reports = evaluate_dataset(ims, candidates, g.harness(), g.pool(), golden);
  write_reports(reports, out);
  int missing = 0, errors = 0, passed = 0;
  for (const auto& r : reports) {
    missing += std::find(r.failure_tags.begin(), r.failure_tags.end(), tag::kMissing) != r.failure_tags.end();
    errors += !r.error.empty();
    passed += r.passed();
  }
  std::cout << "evaluated " << reports.size() << " instances: " << passed << " passed, " << missing << " missing, " << errors
            << " errors\n";
  for (const auto& r : reports) {
    if (!r.error.empty()) std::cerr << "  " << r.instance_id << ": " << r.error << "\n";
  }
  return 0;
}

int run_perturb(const Globals& g, const std::string& golden, const std::string& dataset, const std::string& mode,
                std::optional<double> magnitude, const std::string& at, int piece, const std::string& only, const std::string& out)
{
  PerturbSpec spec;
  spec.mode = perturb_mode_from_string(mode);
  spec.magnitude = magnitude;
  if (!at.empty()) spec.at = StepRef::parse(at);
  spec.piece = piece;
  auto ims = load_dataset(dataset, g.pool());
  if (!only.empty()) {
    const auto ids = split_list(only);
    const std::set<std::string> keep(ids.begin(), ids.end());
    std::erase_if(ims, [&](const InstanceManifest& im) { return !keep.count(im.instance_id); });
  }
  std::erase_if(ims, [&](const InstanceManifest& im) { return !fs::is_directory(fs::path(golden) / im.instance_id); });
  if (ims.empty()) fail(ErrorCode::UsageError, "no golden videos found under " + golden);
  const int n = perturb_dataset(ims, golden, spec, out, g.pool());
  std::cout << "perturbed " << n << " videos with " << mode << " into " << out << "\n";
  return 0;
}

int run_sweep(const Globals& g, const std::string& dataset, const std::string& axis, const std::string& values,
              const std::string& splits, int per_cell, int lead, int tail, const std::string& candidates, const std::string& out)
{
  SweepConfig sc;
  sc.axis = sweep_axis_from_string(axis);
  sc.values = int_list(values);
  sc.splits = split_list(splits);
  sc.instances_per_cell = per_cell;
  sc.seed = g.seed;
  sc.lead_hold = lead;
  sc.tail_hold = tail;
  const auto ims = load_dataset(dataset, g.pool());
  const auto cells = run_sweep(sc, ims, g.harness(), g.pool(), candidates);
  write_text_file(fs::path(out) / "sweep.csv", sweep_csv(sc, cells));
  write_text_file(fs::path(out) / "sweep.svg", sweep_svg(sc, cells));
  int invalid = 0;
  for (const auto& c : cells) invalid += !c.valid;
  std::cout << "swept " << cells.size() << " cells (" << invalid << " invalid) into " << out << "\n";
  return 0;
}

int run_report(const std::string& reports_dir, const std::string& formats, const std::string& out)
{
  const auto reports = load_reports(reports_dir);
  if (reports.empty()) {
    std::cerr << "error: no report.json files under " << reports_dir << "\n";
    return 1;
  }
  const ReportBundle b = build_report(reports);
  for (const auto& f : split_list(formats)) {
    if (f == "csv") {
      write_text_file(fs::path(out) / "aggregate.csv", b.csv);
      std::string h = "tag,count\n";
      for (const auto& [k, v] : tag_histogram(reports)) h += csv_escape(k) + "," + std::to_string(v) + "\n";
      write_text_file(fs::path(out) / "tag_histogram.csv", h);
    } else if (f == "json") {
      write_text_file(fs::path(out) / "aggregate.json", b.json.dump(2) + "\n");
    } else if (f == "svg") {
      write_text_file(fs::path(out) / "report.svg", b.svg);
    } else {
      fail(ErrorCode::UsageError, "unknown report format '" + f + "'");
    }
  }
  std::cout << "aggregated " << reports.size() << " reports into " << out << "\n";
  return 0;
}

int run_layouts(const Globals& g, int count, const std::string& out, const std::string& prefix, bool square,
                const std::string& exclude)
{
  std::set<std::string> taken;
  if (!exclude.empty()) {
    for (const auto& l : load_layout_dir(exclude)) taken.insert(silhouette_key(l));
  }
  fs::create_directories(out);
  int written = 0;
  if (square && taken.insert(silhouette_key(square_layout())).second) {
    write_layout_file(square_layout(), fs::path(out) / "square.json");
    ++written;
  }
  for (const auto& l : generate_layout_set(g.seed, count, taken, prefix)) {
    write_layout_file(l, fs::path(out) / (l.name + ".json"));
    ++written;
  }
  std::cout << "wrote " << written << " layouts to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Benchmark generation and rule-based evaluation for maze and tangram planning videos"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "base seed")->capture_default_str();
  app.add_option("--workers", g.workers, "worker threads (default: FPB_WORKERS, then all cores)");
  app.add_option("--config", g.config, "key=value file overriding evaluator and schedule defaults")->check(CLI::ExistingFile);

  std::string task = "maze", tiers = "test", train_layouts, test_layouts, variants = "fade_in,rotation,translation", out;
  bool no_frames = false;
  auto* gen = app.add_subcommand("generate", "write instance manifests and first frames");
  gen->add_option("--task", task, "maze or tangram")->capture_default_str();
  gen->add_option("--tiers", tiers, "maze tiers: train, test, all or a tier JSON file")->capture_default_str();
  gen->add_option("--train-layouts", train_layouts, "directory of training tangram layouts");
  gen->add_option("--test-layouts", test_layouts, "directory of held-out tangram layouts");
  gen->add_option("--variants", variants, "tangram variants, comma separated")->capture_default_str();
  gen->add_option("--out", out, "dataset directory")->required();
  gen->add_flag("--no-frames", no_frames, "skip the first-frame PNGs");

  std::string dataset, golden_out;
  bool force = false;
  auto* syn = app.add_subcommand("synthesize", "render golden solution videos");
  syn->add_option("--dataset", dataset, "dataset directory")->required();
  syn->add_option("--out", golden_out, "output root (default: <dataset>/golden)");
  syn->add_flag("--force", force, "overwrite existing output");

  std::string candidates, eval_out, golden_ref;
  auto* ev = app.add_subcommand("evaluate", "score candidate frame directories");
  ev->add_option("--candidates", candidates, "root holding one frame directory per instance id")->required();
  ev->add_option("--dataset", dataset, "dataset directory")->required();
  ev->add_option("--out", eval_out, "report directory")->required();
  ev->add_option("--golden", golden_ref, "golden videos for tangram reference flags (default: <dataset>/golden)");

  std::string mode, at, only, golden_in, pert_out;
  double magnitude = 0.0;
  int piece = -1;
  auto* pe = app.add_subcommand("perturb", "inject a controlled failure into golden videos");
  pe->add_option("--golden", golden_in, "golden video root")->required();
  pe->add_option("--dataset", dataset, "dataset directory")->required();
  pe->add_option("--mode", mode, "wrong_turn, wall_cross, teleport, freeze, shape_distort, color_drift or piece_vanish")->required();
  auto* mag = pe->add_option("--magnitude", magnitude, "mode-specific strength");
  pe->add_option("--at", at, "path step (integer) or fraction of the video (e.g. 0.5)");
  pe->add_option("--piece", piece, "tangram piece id, -1 to pick from the seed");
  pe->add_option("--instances", only, "comma-separated instance ids (default: all with golden videos)");
  pe->add_option("--out", pert_out, "output root")->required();

  std::string axis = "total_frames", values, splits = "iid", sweep_cands, sweep_out;
  int per_cell = 10, lead = 4, tail = 0;
  auto* sw = app.add_subcommand("sweep", "test-time frame budget sweep");
  sw->add_option("--dataset", dataset, "dataset directory")->required();
  sw->add_option("--axis", axis, "total_frames or kappa")->capture_default_str();
  sw->add_option("--values", values, "comma-separated axis values")->required();
  sw->add_option("--splits", splits, "comma-separated split tags")->capture_default_str();
  sw->add_option("--per-cell", per_cell, "instances per cell")->capture_default_str();
  sw->add_option("--lead-hold", lead, "frames held before motion")->capture_default_str();
  sw->add_option("--tail-hold", tail, "frames held after motion (kappa axis)")->capture_default_str();
  sw->add_option("--candidates", sweep_cands, "root with <axis>_<value>/<id>/ frames (default: score golden videos)");
  sw->add_option("--out", sweep_out, "output directory")->required();

  std::string reports_dir, formats = "csv,json,svg", rep_out;
  auto* rep = app.add_subcommand("report", "aggregate per-instance reports");
  rep->add_option("--reports", reports_dir, "directory searched for report.json files")->required();
  rep->add_option("--format", formats, "csv, json, svg (comma separated)")->capture_default_str();
  rep->add_option("--out", rep_out, "output directory")->required();

  int count = 40;
  std::string lay_out, prefix = "layout", exclude;
  bool square = false;
  auto* lay = app.add_subcommand("layouts", "write synthetic tangram layouts with distinct silhouettes");
  lay->add_option("--count", count, "number of generated layouts")->capture_default_str();
  lay->add_option("--out", lay_out, "output directory")->required();
  lay->add_option("--prefix", prefix, "layout name prefix")->capture_default_str();
  lay->add_flag("--square", square, "also write the classic square");
  lay->add_option("--exclude", exclude, "directory whose silhouettes must not be repeated");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return run_generate(g, task, tiers, train_layouts, test_layouts, variants, out, no_frames);
    if (syn->parsed()) return run_synthesize(g, dataset, golden_out, force);
    if (ev->parsed()) return run_evaluate(g, candidates, dataset, eval_out, golden_ref);
    if (pe->parsed()) {
      return run_perturb(g, golden_in, dataset, mode, mag->count() ? std::optional<double>(magnitude) : std::nullopt, at, piece,
                         only, pert_out);
    }
    if (sw->parsed()) return run_sweep(g, dataset, axis, values, splits, per_cell, lead, tail, sweep_cands, sweep_out);
    if (rep->parsed()) return run_report(reports_dir, formats, rep_out);
    if (lay->parsed()) return run_layouts(g, count, lay_out, prefix, square, exclude);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::UsageError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
