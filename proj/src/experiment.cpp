#include "tsipa/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

#include "tsipa/errors.hpp"
#include "tsipa/random.hpp"
#include "tsipa/scene_io.hpp"

namespace tsipa {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string error_text(const Error& e) {
  std::string s = e.stage().empty() ? "" : "[" + e.stage() + "] ";
  return s + to_string(e.code()) + ": " + e.what();
}

/// Runs body(t) for t in [0, n) on `threads` workers.
template <typename F>
void parallel_for(int n, int threads, F&& body) {
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int t = 0; t < n; ++t) body(t);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int t = next++; t < n; t = next++) body(t);
    });
  }
  for (auto& th : pool) th.join();
}

ErrorStats stats_or_nan(const std::vector<double>& v) {
  if (v.empty()) return {kNaN, kNaN, kNaN};
  return error_stats(v);
}

SweepAxis parse_sweep(const json& j) {
  SweepAxis axis;
  axis.name = j.value("name", "");
  axis.units = j.value("units", "");
  if (j.contains("values")) {
    axis.values = j.at("values").get<std::vector<double>>();
  } else if (j.contains("start")) {
    const double start = j.at("start").get<double>();
    const double stop = j.at("stop").get<double>();
    const int count = j.at("count").get<int>();
    if (count < 1) throw Error(ErrorCode::kDomain, "sweep count must be >= 1");
    for (int i = 0; i < count; ++i) {
      axis.values.push_back(count == 1 ? start : start + (stop - start) * i / (count - 1));
    }
  }
  return axis;
}

struct TrialOutcome {
  // [method][optimizer] errors; NaN on failure
  std::vector<std::vector<double>> errors;
  std::vector<GeometryReport> geometry;  // per method, rotation study only
  std::vector<bool> geometry_ok;
  std::string failure;
};

}  // namespace

const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kAmbiguitySweep: return "ambiguity_sweep";
    case ExperimentKind::kDistanceSweep: return "distance_sweep";
    case ExperimentKind::kRotationStudy: return "rotation_study";
    case ExperimentKind::kSingleFix: return "single_fix";
    case ExperimentKind::kRepeatFix: return "repeat_fix";
  }
  return "?";
}

ExperimentKind experiment_kind_from(const std::string& s) {
  for (auto k : {ExperimentKind::kAmbiguitySweep, ExperimentKind::kDistanceSweep,
                 ExperimentKind::kRotationStudy, ExperimentKind::kSingleFix,
                 ExperimentKind::kRepeatFix}) {
    if (s == to_string(k)) return k;
  }
  throw Error(ErrorCode::kDomain, "unknown experiment kind '" + s + "'");
}

ExperimentSpec experiment_spec_from_json(const json& j, const std::filesystem::path& base_dir) {
  try {
    ExperimentSpec spec;
    spec.id = j.value("id", "experiment");
    spec.kind = experiment_kind_from(j.at("kind").get<std::string>());
    const json& base = j.at("base_scene");
    spec.base_scene = base.is_string() ? read_scene_file(base_dir / base.get<std::string>())
                                       : scene_from_json(base);
    if (j.contains("sweep")) spec.sweep = parse_sweep(j.at("sweep"));
    spec.trials_per_point = j.value("trials_per_point", spec.trials_per_point);
    if (j.contains("methods")) {
      spec.methods.clear();
      for (const auto& m : j.at("methods")) spec.methods.push_back(range_method_from(m.get<std::string>()));
    }
    if (j.contains("optimizers")) {
      spec.optimizers.clear();
      for (const auto& o : j.at("optimizers")) spec.optimizers.push_back(optimizer_from(o.get<std::string>()));
    }
    spec.seed = j.value("seed", spec.seed);
    spec.output_path = j.value("output", spec.id);
    if (j.contains("azimuths_deg")) spec.azimuths_deg = j.at("azimuths_deg").get<std::vector<double>>();
    if (j.contains("rotation")) {
      const json& r = j.at("rotation");
      spec.rotation.step_deg_per_tis = r.at("step_deg_per_tis").get<std::vector<double>>();
      spec.rotation.turns = r.at("turns").get<int>();
      spec.rotation.radius_m = r.at("radius_m").get<double>();
      spec.rotation.fixed_distance_m = r.at("fixed_distance_m").get<double>();
      spec.rotation.start_azimuth_deg = r.value("start_azimuth_deg", spec.rotation.start_azimuth_deg);
    }
    if (spec.kind == ExperimentKind::kRotationStudy) {
      spec.sweep.name = "turn";
      spec.sweep.units = "index";
      spec.sweep.values.clear();
      for (int t = 0; t <= spec.rotation.turns; ++t) spec.sweep.values.push_back(t);
    }
    if (spec.sweep.values.empty()) spec.sweep.values = {0.0};
    spec.pipeline.aoa_mode = aoa_mode_from(j.value("aoa_mode", std::string("ambiguity")));
    spec.pipeline.dictionary_step_deg = j.value("dictionary_step_deg", 1.0);
    validate_experiment_spec(spec);
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, std::string("experiment spec: ") + e.what());
  }
}

ExperimentSpec read_experiment_spec(const std::filesystem::path& path) {
  return experiment_spec_from_json(read_json_file(path), path.parent_path());
}

void validate_experiment_spec(const ExperimentSpec& spec) {
  if (spec.trials_per_point < 1) throw Error(ErrorCode::kDomain, "trials_per_point must be >= 1");
  if (spec.methods.empty()) throw Error(ErrorCode::kDomain, "methods must not be empty");
  if (spec.optimizers.empty() && spec.kind != ExperimentKind::kRotationStudy) {
    throw Error(ErrorCode::kDomain, "optimizers must not be empty");
  }
  const auto& v = spec.sweep.values;
  bool up = true;
  bool down = true;
  for (std::size_t i = 1; i < v.size(); ++i) {
    up = up && v[i] > v[i - 1];
    down = down && v[i] < v[i - 1];
  }
  if (v.empty() || !(up || down)) throw Error(ErrorCode::kDomain, "sweep values must be strictly monotone");
  if (spec.kind == ExperimentKind::kDistanceSweep && spec.azimuths_deg.size() < 2) {
    throw Error(ErrorCode::kDomain, "distance sweep needs at least 2 azimuths");
  }
  require_valid(spec.base_scene);
}

Scene scene_for_point(const ExperimentSpec& spec, std::size_t index) {
  const double level = spec.sweep.values.at(index);
  switch (spec.kind) {
    case ExperimentKind::kAmbiguitySweep: {
      Scene s = spec.base_scene;
      s.noise.aoa_ambiguity_mode = AmbiguityMode::kFixedDeg;
      s.noise.aoa_ambiguity_deg = level;
      return s;
    }
    case ExperimentKind::kDistanceSweep:
      return with_planar_layout(spec.base_scene, level, spec.azimuths_deg);
    case ExperimentKind::kRotationStudy:
      return rotation_scenario(spec.base_scene, spec.rotation).at(index);
    case ExperimentKind::kSingleFix:
    case ExperimentKind::kRepeatFix:
      return spec.base_scene;
  }
  return spec.base_scene;
}

const PointAggregate& RunRecord::at(std::size_t level_index, RangeMethod m, Optimizer o) const {
  const double level = sweep.values.at(level_index);
  for (const auto& a : aggregates) {
    if (a.level == level && a.method == m && a.optimizer == o) return a;
  }
  throw Error(ErrorCode::kDomain, "no aggregate for the requested point");
}

RunRecord run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  validate_experiment_spec(spec);
  const auto start = std::chrono::steady_clock::now();
  const int threads = options.threads > 0
                          ? options.threads
                          : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  RunRecord rec;
  rec.id = spec.id;
  rec.kind = spec.kind;
  rec.seed = spec.seed;
  rec.trials_per_point = spec.trials_per_point;
  rec.sweep = spec.sweep;

  const bool rotation = spec.kind == ExperimentKind::kRotationStudy;
  std::vector<Scene> rotation_scenes;
  if (rotation) rotation_scenes = rotation_scenario(spec.base_scene, spec.rotation);

  const std::size_t n_methods = spec.methods.size();
  const std::size_t n_opt = spec.optimizers.size();

  for (std::size_t p = 0; p < spec.sweep.values.size(); ++p) {
    const double level = spec.sweep.values[p];
    const Scene scene = rotation ? rotation_scenes.at(p) : scene_for_point(spec, p);
    require_valid(scene);

    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(spec.trials_per_point));
    parallel_for(spec.trials_per_point, threads, [&](int t) {
      TrialOutcome& out = outcomes[static_cast<std::size_t>(t)];
      const std::uint64_t seed = derive_seed(spec.seed, static_cast<std::uint64_t>(t));
      out.errors.assign(n_methods, std::vector<double>(n_opt, kNaN));
      out.geometry.resize(n_methods);
      out.geometry_ok.assign(n_methods, false);
      for (std::size_t m = 0; m < n_methods; ++m) {
        try {
          const FrontEnd front = run_front_end(scene, spec.methods[m], seed, spec.pipeline);
          if (rotation) {
            std::vector<Position3> est;
            for (const auto& f : front.tis_fixes) est.push_back(f.position_est);
            out.geometry[m] = geometry_report(est, scene.user.position);
            out.geometry_ok[m] = true;
          }
          std::vector<RayEstimate> fresh;
          if (spec.kind == ExperimentKind::kRepeatFix) {
            const std::uint64_t s3 = derive_seed(seed, 3);
            for (const auto& f : front.tis_fixes) {
              fresh.push_back(ray_from_ambiguity(scene, f.tis_id, f.position_est,
                                                 derive_seed(s3, static_cast<std::uint64_t>(f.tis_id))));
            }
          }
          for (std::size_t o = 0; o < n_opt; ++o) {
            try {
              const UserFix fix =
                  spec.kind == ExperimentKind::kRepeatFix
                      ? run_repeat_fix(front.tis_fixes, fresh, spec.optimizers[o],
                                       spec.pipeline.user, scene.user.position)
                      : run_back_end(scene, front, spec.optimizers[o], spec.pipeline);
              out.errors[m][o] = *fix.error_vs_truth_m;
            } catch (const Error& e) {
              if (out.failure.empty()) out.failure = error_text(e);
            }
          }
        } catch (const Error& e) {
          if (out.failure.empty()) out.failure = error_text(e);
        }
      }
    });

    // Reduction in trial order.
    for (std::size_t m = 0; m < n_methods; ++m) {
      for (std::size_t o = 0; o < n_opt; ++o) {
        PointAggregate agg;
        agg.level = level;
        agg.method = spec.methods[m];
        agg.optimizer = spec.optimizers[o];
        std::vector<double> ok;
        for (std::size_t t = 0; t < outcomes.size(); ++t) {
          const double e = outcomes[t].errors[m][o];
          if (std::isnan(e)) {
            ++agg.failures;
          } else {
            ok.push_back(e);
          }
          if (options.keep_rows) {
            rec.rows.push_back({level, spec.methods[m], spec.optimizers[o], static_cast<int>(t), e});
          }
        }
        agg.count = static_cast<int>(ok.size());
        agg.stats = stats_or_nan(ok);
        rec.failures += agg.failures;
        rec.aggregates.push_back(agg);
      }
      if (rotation) {
        GeometryAggregate g;
        g.turn = static_cast<int>(p);
        g.method = to_string(spec.methods[m]);
        GeometryReport& sum = g.mean;
        for (const auto& out : outcomes) {
          const std::size_t idx = m;
          if (!out.geometry_ok[idx]) {
            ++g.failures;
            continue;
          }
          const GeometryReport& r = out.geometry[idx];
          sum.tpdop_m += r.tpdop_m;
          sum.rmse_m += r.rmse_m;
          sum.centroid += r.centroid;
          sum.mean_distance_m += r.mean_distance_m;
          sum.centroid_offset_m += r.centroid_offset_m;
          if (sum.per_tis_distance_m.empty()) sum.per_tis_distance_m.assign(r.per_tis_distance_m.size(), 0.0);
          for (std::size_t k = 0; k < r.per_tis_distance_m.size(); ++k) {
            sum.per_tis_distance_m[k] += r.per_tis_distance_m[k];
          }
          ++g.count;
        }
        const double n = g.count > 0 ? g.count : kNaN;
        sum.tpdop_m /= n;
        sum.rmse_m /= n;
        sum.centroid /= n;
        sum.mean_distance_m /= n;
        sum.centroid_offset_m /= n;
        for (double& d : sum.per_tis_distance_m) d /= n;
        rec.failures += g.failures;
        rec.geometry.push_back(g);
      }
    }
    if (rotation) {
      std::vector<Position3> truth;
      for (const auto& t : scene.tis_arrays) truth.push_back(t.position);
      GeometryAggregate g;
      g.turn = static_cast<int>(p);
      g.method = "truth";
      g.count = 1;
      g.mean = geometry_report(truth, scene.user.position);
      rec.geometry.push_back(g);
    }
    for (const auto& out : outcomes) {
      if (!out.failure.empty()) {
        std::ostringstream msg;
        msg << spec.sweep.name << '=' << level << ": " << out.failure;
        rec.failure_messages.push_back(msg.str());
        break;
      }
    }
    if (options.progress) options.progress(p + 1, spec.sweep.values.size());
  }

  rec.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

void write_trials_csv(const RunRecord& record, std::ostream& out) {
  out << "level,method,optimizer,trial,error_m\n";
  out << std::setprecision(17);
  for (const auto& r : record.rows) {
    out << r.level << ',' << to_string(r.method) << ',' << to_string(r.optimizer) << ','
        << r.trial << ',';
    if (!std::isnan(r.error_m)) out << r.error_m;
    out << '\n';
  }
}

json summary_json(const RunRecord& record) {
  auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  json j;
  j["id"] = record.id;
  j["kind"] = to_string(record.kind);
  j["seed"] = record.seed;
  j["trials_per_point"] = record.trials_per_point;
  j["sweep"] = {{"name", record.sweep.name}, {"units", record.sweep.units},
                {"values", record.sweep.values}};
  j["failures"] = record.failures;
  j["failure_messages"] = record.failure_messages;
  j["wall_time_s"] = record.wall_time_s;
  json aggs = json::array();
  for (const auto& a : record.aggregates) {
    aggs.push_back({{"level", a.level},
                    {"method", to_string(a.method)},
                    {"optimizer", to_string(a.optimizer)},
                    {"count", a.count},
                    {"failures", a.failures},
                    {"mean_m", num(a.stats.mean_m)},
                    {"std_m", num(a.stats.std_m)},
                    {"p95_m", num(a.stats.p95_m)}});
  }
  j["aggregates"] = aggs;
  if (!record.geometry.empty()) {
    json geo = json::array();
    for (const auto& g : record.geometry) {
      geo.push_back({{"turn", g.turn},
                     {"method", g.method},
                     {"count", g.count},
                     {"failures", g.failures},
                     {"tpdop_m", num(g.mean.tpdop_m)},
                     {"rmse_m", num(g.mean.rmse_m)},
                     {"centroid_m", {num(g.mean.centroid.x()), num(g.mean.centroid.y()),
                                     num(g.mean.centroid.z())}},
                     {"mean_distance_m", num(g.mean.mean_distance_m)},
                     {"centroid_offset_m", num(g.mean.centroid_offset_m)}});
    }
    j["geometry"] = geo;
  }
  return j;
}

void write_run_outputs(const RunRecord& record, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(dir / name);
    if (!f) throw Error(ErrorCode::kIo, "cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open(record.id + "_trials.csv");
    write_trials_csv(record, f);
  }
  {
    auto f = open(record.id + "_summary.json");
    f << summary_json(record).dump(2) << '\n';
  }
  if (!record.geometry.empty()) {
    std::vector<KeyedReport> rows;
    for (const auto& g : record.geometry) rows.push_back({g.turn, g.method, g.mean});
    auto f = open(record.id + "_geometry.csv");
    write_geometry_csv(rows, f);
  }
}

}  // namespace tsipa
