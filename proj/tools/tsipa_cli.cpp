#include <filesystem>
#include <functional>
#include <iomanip>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>

#include <CLI11.hpp>

#include "tsipa/csv_io.hpp"
#include "tsipa/errors.hpp"
#include "tsipa/experiment.hpp"
#include "tsipa/harness.hpp"
#include "tsipa/metrics.hpp"
#include "tsipa/scene_io.hpp"

namespace fs = std::filesystem;
using namespace tsipa;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  int threads = 0;
  bool quiet = false;
};

Position3 parse_point(const std::string& s) {
  std::istringstream in(s);
  Position3 p;
  char c1 = 0;
  char c2 = 0;
  if (!(in >> p.x() >> c1 >> p.y() >> c2 >> p.z()) || c1 != ',' || c2 != ',') {
    throw Error(ErrorCode::kDomain, "expected x,y,z but got '" + s + "'");
  }
  return p;
}

void write_to(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  body(f);
}

int cmd_validate(const std::string& scene_path, const Globals& g) {
  const Scene scene = read_scene_file(scene_path);
  const auto result = validate_scene(scene);
  if (const auto* diags = std::get_if<std::vector<std::string>>(&result)) {
    for (const auto& d : *diags) std::cout << "invalid: " << d << '\n';
    return 1;
  }
  if (!g.quiet) {
    std::cout << "valid: " << scene.satellites.size() << " satellites, " << scene.tis_arrays.size()
              << " TIS arrays\n";
  }
  return 0;
}

int cmd_fix(const std::string& scene_path, const std::string& method, const std::string& optimizer,
            const std::string& aoa_mode, const std::string& out_dir, const Globals& g) {
  const Scene scene = read_scene_file(scene_path);
  PipelineOptions opts;
  opts.aoa_mode = aoa_mode_from(aoa_mode);
  const TsipaResult r = run_tsipa_once(scene, range_method_from(method), optimizer_from(optimizer),
                                       g.seed.value_or(scene.rng_seed), opts);
  const UserFix fixes[] = {r.user_fix};
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_to(fs::path(out_dir) / "tis_fixes.csv", [&](std::ostream& o) { write_tis_fix_csv(r.tis_fixes, o); });
    write_to(fs::path(out_dir) / "rays.csv", [&](std::ostream& o) { write_rays_csv(r.rays, o); });
    write_to(fs::path(out_dir) / "user_fix.csv", [&](std::ostream& o) { write_user_fix_csv(fixes, o); });
  }
  if (!g.quiet || out_dir.empty()) {
    write_tis_fix_csv(r.tis_fixes, std::cout);
    std::cout << '\n';
    write_rays_csv(r.rays, std::cout);
    std::cout << '\n';
    write_user_fix_csv(fixes, std::cout);
  }
  return 0;
}

int cmd_repeat_fix(const std::string& fixes_path, const std::string& rays_path,
                   const std::string& optimizer, const std::string& truth, const Globals&) {
  const auto stored = read_tis_fix_csv(fs::path(fixes_path));
  const auto rays = read_rays_csv(fs::path(rays_path));
  std::optional<Position3> t;
  if (!truth.empty()) t = parse_point(truth);
  const UserFix fix = run_repeat_fix(stored, rays, optimizer_from(optimizer), {}, t);
  const UserFix fixes[] = {fix};
  write_user_fix_csv(fixes, std::cout);
  return 0;
}

int cmd_experiment(const std::string& spec_path, const std::string& out_dir, const Globals& g) {
  ExperimentSpec spec = read_experiment_spec(spec_path);
  if (g.seed) spec.seed = *g.seed;
  if (g.trials) spec.trials_per_point = *g.trials;
  RunOptions opts;
  opts.threads = g.threads;
  if (!g.quiet) {
    opts.progress = [](std::size_t done, std::size_t total) {
      std::cerr << "point " << done << '/' << total << '\n';
    };
  }
  const RunRecord rec = run_experiment(spec, opts);
  write_run_outputs(rec, out_dir);
  if (!g.quiet) {
    std::cout << rec.id << ": " << rec.aggregates.size() << " aggregates, " << rec.failures
              << " failed trials, " << rec.wall_time_s << " s -> " << out_dir << '\n';
    for (const auto& m : rec.failure_messages) std::cout << "  " << m << '\n';
  }
  return 0;
}

int cmd_metrics(const std::string& positions_path, const std::string& user, const Globals&) {
  const auto positions = read_positions_csv(fs::path(positions_path));
  const Position3 u = user.empty() ? Position3::Zero() : parse_point(user);
  const GeometryReport r = geometry_report(positions, u);
  std::cout << std::setprecision(17) << "tpdop_m," << r.tpdop_m << "\nrmse_m," << r.rmse_m
            << "\ncentroid_m," << r.centroid.x() << ' ' << r.centroid.y() << ' '
            << r.centroid.z() << "\nmean_distance_m," << r.mean_distance_m
            << "\ncentroid_offset_m," << r.centroid_offset_m << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TIS-aided satellite indoor positioning toolkit"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  int trials = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Master RNG seed")->group("Global");
  auto* trials_opt = app.add_option("--trials", trials, "Monte Carlo trials per sweep point")->group("Global");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->group("Global");
  app.add_flag("--quiet", g.quiet, "Suppress progress output")->group("Global");
  app.fallthrough();

  std::string scene_path;
  auto* validate = app.add_subcommand("validate", "Check scene invariants");
  validate->add_option("scene", scene_path, "Scene JSON file")->required();

  std::string method = "cem";
  std::string optimizer = "lsm";
  std::string aoa_mode = "ambiguity";
  std::string out_dir;
  auto* fix = app.add_subcommand("fix", "Single end-to-end positioning run");
  fix->add_option("scene", scene_path, "Scene JSON file")->required();
  fix->add_option("--method", method, "cem|cpm");
  fix->add_option("--optimizer", optimizer, "lsm|mvm|nuom|gdm");
  fix->add_option("--aoa-mode", aoa_mode, "ambiguity|dictionary");
  fix->add_option("--out", out_dir, "Directory for tis_fixes.csv, rays.csv, user_fix.csv");

  std::string fixes_path;
  std::string rays_path;
  std::string truth;
  auto* repeat = app.add_subcommand("repeat-fix", "Second-time positioning from stored TIS fixes");
  repeat->add_option("fixes", fixes_path, "TIS fix CSV")->required();
  repeat->add_option("rays", rays_path, "Ray CSV")->required();
  repeat->add_option("--optimizer", optimizer, "lsm|mvm|nuom|gdm");
  repeat->add_option("--truth", truth, "True user position x,y,z");

  std::string spec_path;
  auto* experiment = app.add_subcommand("experiment", "Run a Monte Carlo sweep");
  experiment->add_option("spec", spec_path, "Experiment spec JSON")->required();
  experiment->add_option("--out", out_dir, "Output directory")->required();

  std::string positions_path;
  std::string user;
  auto* metrics = app.add_subcommand("metrics", "TPDoP and RMSE of a TIS constellation");
  metrics->add_option("positions", positions_path, "CSV with x,y,z columns")->required();
  metrics->add_option("--user", user, "User position x,y,z (default origin)");

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count() > 0) g.seed = seed;
  if (trials_opt->count() > 0) g.trials = trials;

  try {
    if (validate->parsed()) return cmd_validate(scene_path, g);
    if (fix->parsed()) return cmd_fix(scene_path, method, optimizer, aoa_mode, out_dir, g);
    if (repeat->parsed()) return cmd_repeat_fix(fixes_path, rays_path, optimizer, truth, g);
    if (experiment->parsed()) return cmd_experiment(spec_path, out_dir, g);
    if (metrics->parsed()) return cmd_metrics(positions_path, user, g);
  } catch (const Error& e) {
    std::cerr << "error";
    if (!e.stage().empty()) std::cerr << " [" << e.stage() << "]";
    std::cerr << " " << to_string(e.code()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
