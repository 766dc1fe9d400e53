#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsipa/harness.hpp"
#include "tsipa/metrics.hpp"

namespace tsipa {

enum class ExperimentKind { kAmbiguitySweep, kDistanceSweep, kRotationStudy, kSingleFix, kRepeatFix };

const char* to_string(ExperimentKind k);
ExperimentKind experiment_kind_from(const std::string& s);

struct SweepAxis {
  std::string name;
  std::string units;
  std::vector<double> values;  ///< strictly monotone
};

struct ExperimentSpec {
  std::string id;
  ExperimentKind kind = ExperimentKind::kSingleFix;
  Scene base_scene;
  SweepAxis sweep;
  int trials_per_point = 500;
  std::vector<RangeMethod> methods{RangeMethod::kCem, RangeMethod::kCpm};
  std::vector<Optimizer> optimizers{Optimizer::kMvm, Optimizer::kNuom, Optimizer::kLsm,
                                    Optimizer::kGdm};
  std::uint64_t seed = 1;
  std::string output_path;
  /// Distance sweep: array azimuths around the user.
  std::vector<double> azimuths_deg{0.0, 30.0, 60.0, 90.0};
  /// Rotation study geometry; the sweep axis is the turn index 0..turns.
  RotationParams rotation;
  PipelineOptions pipeline;
};

/// Parses a spec document; `base_scene` is either an inline scene object or
/// a path resolved against `base_dir`. Throws kIo / kDomain.
ExperimentSpec experiment_spec_from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir = {});
ExperimentSpec read_experiment_spec(const std::filesystem::path& path);
/// Validates the spec invariants (trials >= 1, monotone sweep, non-empty sets).
void validate_experiment_spec(const ExperimentSpec& spec);

/// Scene used at sweep point `index`.
Scene scene_for_point(const ExperimentSpec& spec, std::size_t index);

struct PointAggregate {
  double level = 0.0;
  RangeMethod method = RangeMethod::kCem;
  Optimizer optimizer = Optimizer::kLsm;
  int count = 0;     ///< successful trials
  int failures = 0;  ///< count + failures == trials_per_point
  ErrorStats stats;  ///< NaN when count == 0
};

struct TrialRow {
  double level = 0.0;
  RangeMethod method = RangeMethod::kCem;
  Optimizer optimizer = Optimizer::kLsm;
  int trial = 0;
  double error_m = 0.0;  ///< NaN for a failed trial
};

/// Rotation study: per-turn means of stage-1 geometry metrics. method is
/// "CEM", "CPM" or "truth" (the true TIS positions).
struct GeometryAggregate {
  int turn = 0;
  std::string method;
  int count = 0;
  int failures = 0;
  GeometryReport mean;  ///< per-field means over successful trials
};

struct RunRecord {
  std::string id;
  ExperimentKind kind = ExperimentKind::kSingleFix;
  std::uint64_t seed = 0;
  int trials_per_point = 0;
  SweepAxis sweep;
  std::vector<PointAggregate> aggregates;
  std::vector<TrialRow> rows;
  std::vector<GeometryAggregate> geometry;
  int failures = 0;
  std::vector<std::string> failure_messages;  ///< first message per failing point
  double wall_time_s = 0.0;

  /// Aggregate for one (level index, method, optimizer); throws kDomain if absent.
  const PointAggregate& at(std::size_t level_index, RangeMethod m, Optimizer o) const;
};

struct RunOptions {
  int threads = 0;  ///< 0 = hardware concurrency
  bool keep_rows = true;
  /// Called after each sweep point with (index, total); may be empty.
  std::function<void(std::size_t, std::size_t)> progress;
};

/// Trial t at every point uses derive_seed(spec.seed, t), so methods,
/// optimizers and sweep points share random numbers. Results are reduced
/// in trial order and are identical for any thread count.
RunRecord run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

/// Tidy CSV: level,method,optimizer,trial,error_m
void write_trials_csv(const RunRecord& record, std::ostream& out);
nlohmann::json summary_json(const RunRecord& record);
/// Writes <id>_trials.csv, <id>_summary.json and, for rotation studies,
/// <id>_geometry.csv into `dir`.
void write_run_outputs(const RunRecord& record, const std::filesystem::path& dir);

}  // namespace tsipa
